// End-to-end: a real labeling service (spawned as a child process), a
// 200-node synthetic session created through the UI form, and 20 queries
// labeled via keyboard shortcuts. Verifies the on-disk journal, the
// labeled-count agreement with the server, and the thin-client contract
// (the app's request log contains documented endpoints only).

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { LabelerApp } from "../src/app.js";

const DOCUMENTED = [
  /^GET \/sessions$/,
  /^POST \/sessions$/,
  /^GET \/sessions\/[0-9a-f]+$/,
  /^GET \/sessions\/[0-9a-f]+\/query$/,
  /^POST \/sessions\/[0-9a-f]+\/labels$/,
  /^GET \/sessions\/[0-9a-f]+\/predictions(\?nodes=[0-9,]+)?$/,
  /^GET \/sessions\/[0-9a-f]+\/history$/,
  /^GET \/sessions\/[0-9a-f]+\/accuracy$/,
];

const N = 200;

// jittered 20x10 grid, class = left/right half; connected under k = 8
function gridPoint(i: number): [number, number] {
  const gx = i % 20;
  const gy = Math.floor(i / 20);
  return [gx + 0.3 * Math.sin(i * 1.7), gy + 0.3 * Math.cos(i * 2.3)];
}

function truthLabel(node: number): number {
  return node % 20 < 10 ? 0 : 1;
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      const port = typeof address === "object" && address ? address.port : 0;
      probe.close(() => resolve(port));
    });
  });
}

let workDir: string;
let sessionRoot: string;
let base: string;
let server: ChildProcess | null = null;
let serverLog = "";
let app: LabelerApp | null = null;

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 60000;
  for (;;) {
    try {
      const response = await fetch(`${base}/sessions`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      throw new Error(`service never came up; log:\n${serverLog}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
}

beforeAll(async () => {
  (HTMLCanvasElement.prototype as any).getContext = () => null;

  workDir = mkdtempSync(join(tmpdir(), "labeler-e2e-"));
  sessionRoot = join(workDir, "sessions");
  const featureLines = [];
  const truthLines = [];
  for (let i = 0; i < N; i++) {
    const [x, y] = gridPoint(i);
    featureLines.push(`${x},${y}`);
    truthLines.push(`${i},${truthLabel(i)}`);
  }
  writeFileSync(join(workDir, "features.csv"), featureLines.join("\n") + "\n");
  writeFileSync(join(workDir, "truth.csv"), truthLines.join("\n") + "\n");

  const port = await freePort();
  base = `http://127.0.0.1:${port}`;
  server = spawn(
    "python3",
    [
      "-m",
      "graphactive.cli",
      "serve",
      "--session-root",
      sessionRoot,
      "--addr",
      `127.0.0.1:${port}`,
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk) => (serverLog += chunk));
  server.stderr?.on("data", (chunk) => (serverLog += chunk));
  await waitForServer();
});

afterAll(async () => {
  app?.stop();
  if (server) {
    const exited = new Promise((resolve) => server!.once("exit", resolve));
    server.kill("SIGTERM");
    const force = setTimeout(() => server!.kill("SIGKILL"), 5000);
    await exited;
    clearTimeout(force);
  }
  rmSync(workDir, { recursive: true, force: true });
});

function fill(id: string, value: string): void {
  (document.getElementById(id) as HTMLInputElement | HTMLSelectElement).value =
    value;
}

describe("labeling a live session through the UI", () => {
  it("creates a session, labels 20 queries by keyboard, and stays inside the API", async () => {
    document.body.innerHTML = '<div id="app"></div>';
    const api = new ApiClient(base);
    app = new LabelerApp(document.getElementById("app") as HTMLElement, api, 0);
    await app.start();
    expect(document.getElementById("empty-state")).toBeTruthy();

    fill("cf-dataset", "grid");
    fill("cf-features", join(workDir, "features.csv"));
    fill("cf-truth", join(workDir, "truth.csv"));
    fill("cf-seeds", "0:0, 19:1");
    fill("cf-m", "40");
    fill("cf-k", "8");
    fill("cf-metric", "euclidean");
    (document.getElementById("cf-create") as HTMLButtonElement).click();
    await vi.waitFor(
      () => {
        expect(document.getElementById("session-view")).toBeTruthy();
      },
      { timeout: 60000, interval: 200 },
    );
    const sessionId = app.view!.descriptor.session_id;
    expect(Number(document.getElementById("labeled-count")!.textContent)).toBe(2);

    const labeledNodes: number[] = [];
    for (let i = 0; i < 20; i++) {
      const card = document.getElementById("query-card")!;
      const node = Number(card.dataset.node);
      labeledNodes.push(node);
      document.dispatchEvent(
        new KeyboardEvent("keydown", {
          key: String(truthLabel(node) + 1),
          bubbles: true,
        }),
      );
      await app.idle();
    }

    const banner = document.getElementById("error-banner") as HTMLElement;
    expect(banner.hidden).toBe(true);

    // displayed labeled_count matches the server's
    const shown = Number(document.getElementById("labeled-count")!.textContent);
    expect(shown).toBe(22);
    const probe = await (await fetch(`${base}/sessions/${sessionId}`)).json();
    expect(probe.labeled_count).toBe(shown);

    // the server journal holds the 2 seeds plus our 20 human labels in order
    const journal = readFileSync(
      join(sessionRoot, sessionId, "journal.csv"),
      "utf8",
    )
      .trim()
      .split("\n");
    expect(journal[0]).toBe("step,index,label,source");
    expect(journal.length).toBe(1 + 22);
    const human = journal.slice(3).map((line) => line.split(","));
    expect(human.length).toBe(20);
    human.forEach((rowParts, idx) => {
      expect(Number(rowParts[0])).toBe(2 + idx);
      expect(Number(rowParts[1])).toBe(labeledNodes[idx]);
      expect(Number(rowParts[2])).toBe(truthLabel(labeledNodes[idx]));
      expect(rowParts[3]).toBe("human");
    });

    // UI history matches the journal length
    expect(Number(document.getElementById("history-count")!.textContent)).toBe(
      22,
    );

    // thin-client contract: nothing outside the documented endpoint set
    expect(api.log.length).toBeGreaterThan(0);
    for (const entry of api.log) {
      const line = `${entry.method} ${entry.path}`;
      expect(
        DOCUMENTED.some((pattern) => pattern.test(line)),
        `undocumented call: ${line}`,
      ).toBe(true);
    }
  });
});
