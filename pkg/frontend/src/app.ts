// Single-page labeling client. The app never computes labels, predictions,
// or acquisition values; it renders what the service returns and maps each
// user action to exactly one documented API call. The only local mutation is
// the optimistic "labeling as ..." marker while a POST is in flight.

import {
  ApiError,
  type AccuracyPoint,
  type CreateSessionBody,
  type HistoryRow,
  type LabelResponse,
  type QueryPayload,
  type SessionDescriptor,
} from "./api.js";
import { drawAccuracyChart, drawDisplayRow, drawHistogram } from "./charts.js";

export interface LabelerApi {
  listSessions(): Promise<{ sessions: SessionDescriptor[] }>;
  createSession(body: CreateSessionBody): Promise<SessionDescriptor>;
  getSession(id: string): Promise<SessionDescriptor>;
  getQuery(id: string): Promise<QueryPayload>;
  postLabel(
    id: string,
    node: number,
    label: number,
    override?: boolean,
  ): Promise<LabelResponse>;
  getHistory(id: string): Promise<{ history: HistoryRow[] }>;
  getAccuracy(id: string): Promise<{ accuracy: AccuracyPoint[] }>;
}

export interface UiSessionView {
  descriptor: SessionDescriptor;
  query: QueryPayload | null;
  history: HistoryRow[];
  accuracy: AccuracyPoint[] | null;
  optimisticLabel: number | null;
}

const HISTORY_SHOWN = 15;

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export class LabelerApp {
  readonly api: LabelerApi;
  readonly root: HTMLElement;
  readonly pollMs: number;

  view: UiSessionView | null = null;
  sessions: SessionDescriptor[] | null = null;
  busy = false;

  private inflight: Promise<void> | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private keyHandler = (ev: KeyboardEvent) => this.handleKey(ev);
  private displayTrail: number[][] = [];
  private errorMessage: string | null = null;

  constructor(root: HTMLElement, api: LabelerApi, pollMs = 1500) {
    this.root = root;
    this.api = api;
    this.pollMs = pollMs;
  }

  async start(): Promise<void> {
    this.root.ownerDocument.addEventListener("keydown", this.keyHandler);
    if (this.pollMs > 0) {
      this.timer = setInterval(() => {
        this.pollTick().catch(() => {});
      }, this.pollMs);
    }
    await this.loadPicker();
  }

  stop(): void {
    this.root.ownerDocument.removeEventListener("keydown", this.keyHandler);
    if (this.timer !== null) clearInterval(this.timer);
  }

  // resolves once no label POST is in flight; used by tests and scripts
  async idle(): Promise<void> {
    while (this.inflight) await this.inflight;
  }

  async loadPicker(): Promise<void> {
    this.view = null;
    try {
      this.sessions = (await this.api.listSessions()).sessions;
    } catch {
      this.sessions = null;
      this.renderRetry();
      return;
    }
    this.errorMessage = null;
    this.renderPicker();
  }

  async openSession(id: string): Promise<void> {
    const descriptor = await this.api.getSession(id);
    this.errorMessage = null;
    this.view = {
      descriptor,
      query: await this.fetchQuery(id),
      history: (await this.api.getHistory(id)).history,
      accuracy: descriptor.truth_registered
        ? (await this.api.getAccuracy(id)).accuracy
        : null,
      optimisticLabel: null,
    };
    this.displayTrail = [];
    this.render();
  }

  private async fetchQuery(id: string): Promise<QueryPayload | null> {
    try {
      return await this.api.getQuery(id);
    } catch (err) {
      if (err instanceof ApiError && err.errorCode === "pool_exhausted") {
        return null;
      }
      throw err;
    }
  }

  async refreshView(): Promise<void> {
    if (this.view) await this.openSession(this.view.descriptor.session_id);
  }

  submitLabel(label: number): Promise<void> {
    const view = this.view;
    if (!view || !view.query || this.busy) return Promise.resolve();
    this.busy = true;
    view.optimisticLabel = label;
    this.render();
    const done = this.postAndAdvance(view, view.query, label)
      .catch((err) => {
        this.showError(err instanceof Error ? err.message : String(err));
      })
      .finally(() => {
        this.busy = false;
        this.inflight = null;
        if (this.view) this.view.optimisticLabel = null;
        this.render();
      });
    this.inflight = done;
    return done;
  }

  private async postAndAdvance(
    view: UiSessionView,
    query: QueryPayload,
    label: number,
  ): Promise<void> {
    const id = view.descriptor.session_id;
    let response: LabelResponse;
    try {
      response = await this.api.postLabel(id, query.node, label);
    } catch (err) {
      if (
        err instanceof ApiError &&
        (err.errorCode === "conflict" || err.errorCode === "node_mismatch")
      ) {
        // someone else labeled first; the server state wins
        await this.refreshView();
        return;
      }
      this.showError(err instanceof Error ? err.message : String(err));
      return;
    }
    this.clearError();
    if (query.display && query.display.length === 2) {
      this.displayTrail.push(query.display);
    }
    view.descriptor.labeled_count = response.labeled_count;
    view.descriptor.pool_remaining = response.pool_remaining;
    view.descriptor.step = response.step + 1;
    view.descriptor.pending = response.next_query
      ? response.next_query.node
      : null;
    view.query = response.next_query;
    view.history = (await this.api.getHistory(id)).history;
    if (view.descriptor.truth_registered) {
      view.accuracy = (await this.api.getAccuracy(id)).accuracy;
    }
  }

  handleKey(ev: KeyboardEvent): void {
    const target = ev.target as HTMLElement | null;
    const tag = target && target.tagName;
    if (tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT") return;
    if (!this.view || !this.view.query) return;
    if (!/^[1-9]$/.test(ev.key)) return;
    const label = Number(ev.key) - 1;
    if (label < this.view.descriptor.n_classes) void this.submitLabel(label);
  }

  async pollTick(): Promise<void> {
    if (this.busy || !this.view) return;
    const id = this.view.descriptor.session_id;
    const descriptor = await this.api.getSession(id);
    if (!this.view || this.view.descriptor.session_id !== id) return;
    if (descriptor.step !== this.view.descriptor.step) {
      await this.refreshView();
    } else {
      this.view.descriptor = descriptor;
      this.renderCounts();
    }
  }

  // ---- rendering ----------------------------------------------------

  private renderRetry(): void {
    this.root.innerHTML = `
      <div class="banner error" id="retry-banner">
        Labeling service is unreachable.
        <button id="retry-btn">Retry</button>
      </div>`;
    this.el("retry-btn").onclick = () => void this.loadPicker();
  }

  private renderPicker(): void {
    const sessions = this.sessions ?? [];
    const rows = sessions
      .map(
        (s) => `
        <tr>
          <td>${esc(s.dataset)}</td>
          <td class="mono">${s.session_id}</td>
          <td>${s.acquisition}</td>
          <td>${s.labeled_count} / ${s.n}</td>
          <td><button class="open-btn" data-id="${s.session_id}">Open</button></td>
        </tr>`,
      )
      .join("");
    const listing = sessions.length
      ? `<table class="sessions">
           <tr><th>dataset</th><th>id</th><th>acquisition</th><th>labeled</th><th></th></tr>
           ${rows}
         </table>`
      : `<p id="empty-state">No sessions yet. Create one below to start labeling.</p>`;
    this.root.innerHTML = `
      <h1>graphactive labeler</h1>
      <div id="error-banner" class="banner error" hidden></div>
      <div id="picker">
        ${listing}
        <details id="create-form" ${sessions.length ? "" : "open"}>
          <summary>Create session</summary>
          <label>dataset <input id="cf-dataset" value="unnamed"></label>
          <label>features path <input id="cf-features" placeholder="/path/to/features.gafe"></label>
          <label>truth path <input id="cf-truth" placeholder="optional index,class CSV"></label>
          <label>classes <input id="cf-classes" type="number" min="2" placeholder="from truth if empty"></label>
          <label>seed labels <input id="cf-seeds" placeholder="node:label, node:label"></label>
          <label>acquisition
            <select id="cf-acquisition">
              <option>uncertainty</option><option>vopt</option>
              <option>mc</option><option>mcvopt</option><option>random</option>
            </select>
          </label>
          <label>m <input id="cf-m" type="number" value="300"></label>
          <label>k <input id="cf-k" type="number" value="20"></label>
          <label>metric
            <select id="cf-metric"><option>angular</option><option>euclidean</option></select>
          </label>
          <button id="cf-create">Create</button>
        </details>
      </div>`;
    for (const btn of this.root.querySelectorAll<HTMLButtonElement>(".open-btn")) {
      btn.onclick = () => void this.openAndReport(btn.dataset.id as string);
    }
    this.el("cf-create").onclick = () => void this.createFromForm();
    this.syncErrorBanner();
  }

  private async openAndReport(id: string): Promise<void> {
    try {
      await this.openSession(id);
    } catch (err) {
      this.showError(err instanceof Error ? err.message : String(err));
    }
  }

  private async createFromForm(): Promise<void> {
    const value = (id: string) =>
      (this.el(id) as HTMLInputElement | HTMLSelectElement).value.trim();
    const body: CreateSessionBody = {
      dataset: value("cf-dataset") || "unnamed",
      acquisition: value("cf-acquisition"),
      m: Number(value("cf-m")),
      k: Number(value("cf-k")),
      metric: value("cf-metric"),
    };
    if (value("cf-features")) body.features_path = value("cf-features");
    if (value("cf-truth")) body.truth_path = value("cf-truth");
    if (value("cf-classes")) body.n_classes = Number(value("cf-classes"));
    const seeds = value("cf-seeds");
    if (seeds) {
      body.seed_labels = seeds
        .split(/[\s,]+/)
        .filter((pair) => pair)
        .map((pair) => {
          const [node, label] = pair.split(":");
          return [Number(node), Number(label)] as [number, number];
        });
    }
    try {
      const descriptor = await this.api.createSession(body);
      await this.openSession(descriptor.session_id);
    } catch (err) {
      this.showError(err instanceof Error ? err.message : String(err));
    }
  }

  private render(): void {
    const view = this.view;
    if (!view) return;
    const d = view.descriptor;
    const query = view.query;
    const buttons = Array.from({ length: d.n_classes }, (_, cls) => {
      const hint = cls < 9 ? ` <span class="hint">[${cls + 1}]</span>` : "";
      return `<button class="label-btn" data-label="${cls}">class ${cls}${hint}</button>`;
    }).join("");
    const marker =
      view.optimisticLabel !== null
        ? `<div id="optimistic">labeling as class ${view.optimisticLabel}...</div>`
        : "";
    const queryCard = query
      ? `<div id="query-card" data-node="${query.node}">
           <div class="big">query node <b id="query-node">${query.node}</b></div>
           <div>score ${query.acquisition_value.toPrecision(4)},
                predicted <span id="query-prediction">${query.prediction}</span>
                (confidence <span id="query-confidence">${query.confidence.toFixed(3)}</span>)</div>
           <canvas id="display-canvas" width="240" height="240"></canvas>
           <div id="label-buttons">${buttons}</div>
           ${marker}
         </div>`
      : `<div id="exhausted">Pool exhausted: no unlabeled candidates remain.</div>`;
    const historyRows = view.history
      .slice(-HISTORY_SHOWN)
      .reverse()
      .map(
        (row) => `
        <tr><td>${row.step}</td><td>${row.node}</td>
            <td>${row.label}</td><td>${row.source}</td></tr>`,
      )
      .join("");
    const accuracyBlock = d.truth_registered
      ? `<div class="panel">
           <h3>accuracy vs labels</h3>
           <canvas id="accuracy-canvas" width="320" height="160"></canvas>
           <div id="accuracy-latest">${latestAccuracy(view.accuracy)}</div>
         </div>`
      : "";
    this.root.innerHTML = `
      <h1>graphactive labeler</h1>
      <div id="error-banner" class="banner error" hidden></div>
      <div id="session-view">
        <div id="session-header">
          <button id="back-btn">&larr; sessions</button>
          <b>${esc(d.dataset)}</b> <span class="mono">${d.session_id}</span>
          &middot; ${d.acquisition}
          &middot; labeled <span id="labeled-count">${d.labeled_count}</span> / ${d.n}
          &middot; pool <span id="pool-remaining">${d.pool_remaining}</span>
          &middot; step <span id="step">${d.step}</span>
        </div>
        ${queryCard}
        <div class="panels">
          ${accuracyBlock}
          <div class="panel">
            <h3>labels per class</h3>
            <canvas id="histogram-canvas" width="320" height="160"></canvas>
          </div>
          <div class="panel">
            <h3>history (<span id="history-count">${view.history.length}</span>)</h3>
            <table id="history-table">
              <tr><th>step</th><th>node</th><th>label</th><th>source</th></tr>
              ${historyRows}
            </table>
          </div>
        </div>
      </div>`;
    this.el("back-btn").onclick = () => void this.loadPicker();
    for (const btn of this.root.querySelectorAll<HTMLButtonElement>(".label-btn")) {
      btn.onclick = () => void this.submitLabel(Number(btn.dataset.label));
    }
    this.drawCharts();
    this.syncErrorBanner();
  }

  private renderCounts(): void {
    const view = this.view;
    if (!view) return;
    const counts = this.root.querySelector("#labeled-count");
    if (!counts) return;
    counts.textContent = String(view.descriptor.labeled_count);
    const pool = this.root.querySelector("#pool-remaining");
    if (pool) pool.textContent = String(view.descriptor.pool_remaining);
  }

  private drawCharts(): void {
    const view = this.view;
    if (!view) return;
    const histogram = this.root.querySelector<HTMLCanvasElement>("#histogram-canvas");
    if (histogram) {
      const counts = new Array(view.descriptor.n_classes).fill(0);
      for (const row of view.history) {
        if (row.label >= 0 && row.label < counts.length) counts[row.label] += 1;
      }
      drawHistogram(histogram, counts);
    }
    const accuracy = this.root.querySelector<HTMLCanvasElement>("#accuracy-canvas");
    if (accuracy && view.accuracy) drawAccuracyChart(accuracy, view.accuracy);
    const display = this.root.querySelector<HTMLCanvasElement>("#display-canvas");
    if (display && view.query && view.query.display) {
      drawDisplayRow(display, view.query.display, this.displayTrail);
    }
  }

  private showError(message: string): void {
    this.errorMessage = message;
    this.syncErrorBanner();
  }

  private clearError(): void {
    this.errorMessage = null;
    this.syncErrorBanner();
  }

  private syncErrorBanner(): void {
    const banner = this.root.querySelector<HTMLElement>("#error-banner");
    if (!banner) return;
    banner.textContent = this.errorMessage ?? "";
    banner.hidden = this.errorMessage === null;
  }

  private el(id: string): HTMLElement {
    const found = this.root.querySelector<HTMLElement>(`#${id}`);
    if (!found) throw new Error(`missing element #${id}`);
    return found;
  }
}

function latestAccuracy(points: AccuracyPoint[] | null): string {
  if (!points || !points.length) return "";
  const last = points[points.length - 1];
  return `latest: ${(last.accuracy * 100).toFixed(1)}% at ${last.labeled_count} labels`;
}

export function bootstrap(
  root: HTMLElement,
  api: LabelerApi,
  pollMs = 1500,
): LabelerApp {
  const app = new LabelerApp(root, api, pollMs);
  void app.start();
  return app;
}
