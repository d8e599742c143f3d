// Hand-drawn canvas charts. Every function bails out quietly when a 2d
// context is unavailable (jsdom), so rendering code can call them blindly.

const AXIS = "#888";
const GRID = "#ddd";
const LINE = "#2b6cb0";
const BAR = "#2f855a";
const MARK = "#c53030";

function context(canvas: HTMLCanvasElement): CanvasRenderingContext2D | null {
  if (typeof canvas.getContext !== "function") return null;
  try {
    return canvas.getContext("2d");
  } catch {
    return null;
  }
}

function clear(ctx: CanvasRenderingContext2D, canvas: HTMLCanvasElement) {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
}

export function drawAccuracyChart(
  canvas: HTMLCanvasElement,
  points: { labeled_count: number; accuracy: number }[],
): void {
  const ctx = context(canvas);
  if (!ctx) return;
  clear(ctx, canvas);
  const w = canvas.width;
  const h = canvas.height;
  const pad = 28;
  ctx.strokeStyle = AXIS;
  ctx.strokeRect(pad, pad / 2, w - pad - 8, h - pad - pad / 2);
  if (!points.length) return;

  const xMax = Math.max(points[points.length - 1].labeled_count, 1);
  const toX = (c: number) => pad + (c / xMax) * (w - pad - 8);
  const toY = (a: number) => pad / 2 + (1 - a) * (h - pad - pad / 2);

  ctx.strokeStyle = GRID;
  for (const frac of [0.25, 0.5, 0.75]) {
    ctx.beginPath();
    ctx.moveTo(pad, toY(frac));
    ctx.lineTo(w - 8, toY(frac));
    ctx.stroke();
  }

  ctx.strokeStyle = LINE;
  ctx.lineWidth = 2;
  ctx.beginPath();
  points.forEach((p, idx) => {
    if (idx === 0) ctx.moveTo(toX(p.labeled_count), toY(p.accuracy));
    else ctx.lineTo(toX(p.labeled_count), toY(p.accuracy));
  });
  ctx.stroke();
  ctx.lineWidth = 1;

  ctx.fillStyle = AXIS;
  ctx.font = "10px sans-serif";
  ctx.fillText("1.0", 4, toY(1) + 4);
  ctx.fillText("0.0", 4, toY(0) + 4);
  ctx.fillText(`${xMax} labels`, w - pad - 34, h - 4);
}

export function drawHistogram(
  canvas: HTMLCanvasElement,
  counts: number[],
): void {
  const ctx = context(canvas);
  if (!ctx) return;
  clear(ctx, canvas);
  const w = canvas.width;
  const h = canvas.height;
  const pad = 18;
  const top = Math.max(1, ...counts);
  const slot = (w - 2 * pad) / Math.max(counts.length, 1);
  ctx.fillStyle = BAR;
  counts.forEach((count, cls) => {
    const barH = (count / top) * (h - 2 * pad);
    ctx.fillRect(pad + cls * slot + 2, h - pad - barH, slot - 4, barH);
  });
  ctx.fillStyle = AXIS;
  ctx.font = "10px sans-serif";
  counts.forEach((count, cls) => {
    ctx.fillText(`${cls}:${count}`, pad + cls * slot + 2, h - 4);
  });
}

// The display payload is one row of floats per query. A long row that is a
// perfect square renders as a grayscale bitmap; a 2-D row renders as a point
// trail (past queries faded, current highlighted), rescaled to what has been
// seen so far.
export function drawDisplayRow(
  canvas: HTMLCanvasElement,
  row: number[],
  trail: number[][],
): void {
  const ctx = context(canvas);
  if (!ctx) return;
  clear(ctx, canvas);
  const side = Math.round(Math.sqrt(row.length));
  if (row.length >= 16 && side * side === row.length) {
    drawBitmap(ctx, canvas, row, side);
    return;
  }
  if (row.length >= 2) {
    drawTrail(ctx, canvas, trail.concat([row]));
  }
}

function drawBitmap(
  ctx: CanvasRenderingContext2D,
  canvas: HTMLCanvasElement,
  row: number[],
  side: number,
) {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of row) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const span = hi > lo ? hi - lo : 1;
  const image = ctx.createImageData(side, side);
  row.forEach((v, idx) => {
    const gray = Math.round(((v - lo) / span) * 255);
    image.data[idx * 4] = gray;
    image.data[idx * 4 + 1] = gray;
    image.data[idx * 4 + 2] = gray;
    image.data[idx * 4 + 3] = 255;
  });
  ctx.putImageData(image, 0, 0);
  const scale = Math.floor(Math.min(canvas.width, canvas.height) / side);
  if (scale > 1) {
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(canvas, 0, 0, side, side, 0, 0, side * scale, side * scale);
  }
}

function drawTrail(
  ctx: CanvasRenderingContext2D,
  canvas: HTMLCanvasElement,
  points: number[][],
) {
  let xLo = Infinity;
  let xHi = -Infinity;
  let yLo = Infinity;
  let yHi = -Infinity;
  for (const [x, y] of points) {
    xLo = Math.min(xLo, x);
    xHi = Math.max(xHi, x);
    yLo = Math.min(yLo, y);
    yHi = Math.max(yHi, y);
  }
  const pad = 12;
  const sx = (x: number) =>
    pad + ((x - xLo) / (xHi > xLo ? xHi - xLo : 1)) * (canvas.width - 2 * pad);
  const sy = (y: number) =>
    canvas.height -
    pad -
    ((y - yLo) / (yHi > yLo ? yHi - yLo : 1)) * (canvas.height - 2 * pad);

  ctx.fillStyle = GRID;
  for (const [x, y] of points.slice(0, -1)) {
    ctx.beginPath();
    ctx.arc(sx(x), sy(y), 3, 0, 2 * Math.PI);
    ctx.fill();
  }
  const current = points[points.length - 1];
  ctx.strokeStyle = MARK;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(sx(current[0]), sy(current[1]), 6, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.lineWidth = 1;
}
