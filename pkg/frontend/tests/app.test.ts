import { afterEach, beforeAll, describe, expect, it, vi } from "vitest";

import {
  ApiError,
  type AccuracyPoint,
  type CreateSessionBody,
  type HistoryRow,
  type LabelResponse,
  type QueryPayload,
  type SessionDescriptor,
} from "../src/api.js";
import { LabelerApp, type LabelerApi } from "../src/app.js";

function makeDescriptor(over: Partial<SessionDescriptor> = {}): SessionDescriptor {
  return {
    session_id: "s1",
    dataset: "demo",
    created_at: "t0",
    updated_at: "t0",
    n: 50,
    d: 2,
    n_classes: 3,
    acquisition: "uncertainty",
    step: 4,
    labeled_count: 3,
    pool_remaining: 47,
    pending: 17,
    truth_registered: false,
    ...over,
  };
}

function makeQuery(over: Partial<QueryPayload> = {}): QueryPayload {
  return {
    session_id: "s1",
    node: 17,
    acquisition_value: 0.42,
    prediction: 2,
    confidence: 0.81,
    step: 4,
    labeled_count: 3,
    pool_remaining: 47,
    display: [0.25, 0.75],
    ...over,
  };
}

// scriptable stand-in for the HTTP client; postLabel advances a tiny fake
// server unless a test installs its own handler
class FakeApi implements LabelerApi {
  descriptor = makeDescriptor();
  sessions: SessionDescriptor[] | null = null;
  query: QueryPayload | null = makeQuery();
  history: HistoryRow[] = [
    { step: 0, node: 5, label: 0, source: "seed" },
    { step: 1, node: 40, label: 1, source: "seed" },
    { step: 2, node: 9, label: 2, source: "human" },
  ];
  accuracy: AccuracyPoint[] = [];
  labelCalls: { node: number; label: number }[] = [];
  labelHandler: ((node: number, label: number) => Promise<LabelResponse>) | null =
    null;
  failListSessions = 0;
  getSessionCalls = 0;

  async listSessions() {
    if (this.failListSessions > 0) {
      this.failListSessions -= 1;
      throw new ApiError(0, "unreachable", "down");
    }
    return { sessions: this.sessions ?? [this.descriptor] };
  }

  async createSession(_body: CreateSessionBody) {
    return this.descriptor;
  }

  async getSession(_id: string) {
    this.getSessionCalls += 1;
    return { ...this.descriptor };
  }

  async getQuery(_id: string) {
    if (!this.query) {
      throw new ApiError(409, "pool_exhausted", "no unlabeled candidates remain");
    }
    return { ...this.query };
  }

  async postLabel(_id: string, node: number, label: number) {
    this.labelCalls.push({ node, label });
    if (this.labelHandler) return this.labelHandler(node, label);
    const committedStep = this.descriptor.step;
    const next = makeQuery({ node: node + 1, step: committedStep + 1 });
    this.descriptor = {
      ...this.descriptor,
      step: committedStep + 1,
      labeled_count: this.descriptor.labeled_count + 1,
      pool_remaining: this.descriptor.pool_remaining - 1,
      pending: next.node,
    };
    this.history = this.history.concat([
      { step: committedStep, node, label, source: "human" },
    ]);
    this.query = next;
    return {
      session_id: "s1",
      step: committedStep,
      node,
      label,
      labeled_count: this.descriptor.labeled_count,
      pool_remaining: this.descriptor.pool_remaining,
      next_query: next,
    };
  }

  async getHistory(_id: string) {
    return { history: this.history.slice() };
  }

  async getAccuracy(_id: string) {
    return { accuracy: this.accuracy.slice() };
  }
}

let app: LabelerApp | null = null;

beforeAll(() => {
  // jsdom has no canvas backend; charts are written to no-op on null
  (HTMLCanvasElement.prototype as any).getContext = () => null;
});

afterEach(() => {
  app?.stop();
  app = null;
});

function mount(): HTMLElement {
  document.body.innerHTML = '<div id="app"></div>';
  return document.getElementById("app") as HTMLElement;
}

async function startApp(api: FakeApi): Promise<LabelerApp> {
  app = new LabelerApp(mount(), api, 0);
  await app.start();
  return app;
}

async function openApp(api: FakeApi): Promise<LabelerApp> {
  const started = await startApp(api);
  await started.openSession("s1");
  return started;
}

function text(id: string): string {
  const el = document.getElementById(id);
  return el ? (el.textContent ?? "").trim() : "<missing>";
}

function pressKey(key: string): void {
  document.dispatchEvent(new KeyboardEvent("keydown", { key, bubbles: true }));
}

describe("session picker", () => {
  it("shows the empty state with an open create form when no sessions exist", async () => {
    const api = new FakeApi();
    api.sessions = [];
    await startApp(api);
    expect(document.getElementById("empty-state")).toBeTruthy();
    expect(
      (document.getElementById("create-form") as HTMLDetailsElement).open,
    ).toBe(true);
  });

  it("shows a retry banner when the service is down and recovers on retry", async () => {
    const api = new FakeApi();
    api.failListSessions = 1;
    await startApp(api);
    expect(document.getElementById("retry-banner")).toBeTruthy();

    (document.getElementById("retry-btn") as HTMLButtonElement).click();
    await vi.waitFor(() => {
      expect(document.querySelector(".sessions")).toBeTruthy();
    });
  });

  it("opens a session from the list", async () => {
    await startApp(new FakeApi());
    (document.querySelector(".open-btn") as HTMLButtonElement).click();
    await vi.waitFor(() => {
      expect(document.getElementById("session-view")).toBeTruthy();
    });
    expect(text("query-node")).toBe("17");
  });
});

describe("query view and labeling", () => {
  it("renders the server's query, prediction, and counts verbatim", async () => {
    await openApp(new FakeApi());
    expect(text("query-node")).toBe("17");
    expect(text("query-prediction")).toBe("2");
    expect(text("query-confidence")).toBe("0.810");
    expect(text("labeled-count")).toBe("3");
    expect(document.querySelectorAll(".label-btn").length).toBe(3);
  });

  it("maps digit key 3 to label 2", async () => {
    const api = new FakeApi();
    const started = await openApp(api);
    pressKey("3");
    await started.idle();
    expect(api.labelCalls).toEqual([{ node: 17, label: 2 }]);
  });

  it("suppresses a second submit while one is in flight", async () => {
    const api = new FakeApi();
    let release!: (r: LabelResponse) => void;
    api.labelHandler = () => new Promise((resolve) => (release = resolve));
    const started = await openApp(api);

    pressKey("1");
    pressKey("2");
    expect(api.labelCalls.length).toBe(1);
    expect(document.getElementById("optimistic")?.textContent).toContain(
      "class 0",
    );

    release({
      session_id: "s1",
      step: 4,
      node: 17,
      label: 0,
      labeled_count: 4,
      pool_remaining: 46,
      next_query: makeQuery({ node: 18 }),
    });
    await started.idle();
    expect(document.getElementById("optimistic")).toBeNull();
    expect(api.labelCalls.length).toBe(1);
  });

  it("labels via button clicks too", async () => {
    const api = new FakeApi();
    const started = await openApp(api);
    (document.querySelector('.label-btn[data-label="1"]') as HTMLButtonElement).click();
    await started.idle();
    expect(api.labelCalls).toEqual([{ node: 17, label: 1 }]);
  });

  it("updates labeled count, step, and history after a commit", async () => {
    const api = new FakeApi();
    const started = await openApp(api);
    pressKey("1");
    await started.idle();
    expect(text("labeled-count")).toBe("4");
    expect(text("step")).toBe("5");
    expect(text("query-node")).toBe("18");
    expect(text("history-count")).toBe(String(api.history.length));
  });

  it("refreshes to server truth on a conflict", async () => {
    const api = new FakeApi();
    api.labelHandler = async () => {
      throw new ApiError(409, "conflict", "node 17 is already labeled");
    };
    const started = await openApp(api);
    // someone else labeled node 17 in the meantime
    api.descriptor = makeDescriptor({ step: 5, labeled_count: 4, pending: 23 });
    api.query = makeQuery({ node: 23, step: 5 });

    pressKey("1");
    await started.idle();
    expect(text("query-node")).toBe("23");
    expect(text("labeled-count")).toBe("4");
    expect((document.getElementById("error-banner") as HTMLElement).hidden).toBe(true);
  });

  it("surfaces validation errors verbatim and keeps the view", async () => {
    const api = new FakeApi();
    api.labelHandler = async () => {
      throw new ApiError(422, "label_out_of_range", "label 7 outside 0..2");
    };
    const started = await openApp(api);
    pressKey("1");
    await started.idle();
    const banner = document.getElementById("error-banner") as HTMLElement;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toBe("label 7 outside 0..2");
    expect(text("query-node")).toBe("17");
  });

  it("shows the exhausted state when no candidates remain and stops posting", async () => {
    const api = new FakeApi();
    api.labelHandler = async (node, label) => {
      api.query = null;
      return {
        session_id: "s1",
        step: 4,
        node,
        label,
        labeled_count: 50,
        pool_remaining: 0,
        next_query: null,
      };
    };
    const started = await openApp(api);
    pressKey("1");
    await started.idle();
    expect(document.getElementById("exhausted")).toBeTruthy();

    pressKey("1");
    await started.idle();
    expect(api.labelCalls.length).toBe(1);
  });

  it("ignores digits typed into form fields and keys beyond the class count", async () => {
    const api = new FakeApi();
    const started = await openApp(api);

    const input = document.createElement("input");
    document.body.appendChild(input);
    input.dispatchEvent(new KeyboardEvent("keydown", { key: "1", bubbles: true }));

    pressKey("4");
    pressKey("0");
    await started.idle();
    expect(api.labelCalls.length).toBe(0);
  });
});

describe("progress panel", () => {
  it("hides the accuracy chart without ground truth and always shows the histogram", async () => {
    await openApp(new FakeApi());
    expect(document.getElementById("accuracy-canvas")).toBeNull();
    expect(document.getElementById("histogram-canvas")).toBeTruthy();
  });

  it("shows the accuracy chart when ground truth is registered", async () => {
    const api = new FakeApi();
    api.descriptor = makeDescriptor({ truth_registered: true });
    api.accuracy = [
      { step: 0, labeled_count: 1, accuracy: 0.5 },
      { step: 1, labeled_count: 2, accuracy: 0.75 },
    ];
    await openApp(api);
    expect(document.getElementById("accuracy-canvas")).toBeTruthy();
    expect(text("accuracy-latest")).toContain("75.0%");
  });

  it("picks up another writer's commits on a poll tick", async () => {
    const api = new FakeApi();
    const started = await openApp(api);
    api.descriptor = makeDescriptor({ step: 9, labeled_count: 8, pending: 31 });
    api.query = makeQuery({ node: 31, step: 9 });
    await started.pollTick();
    expect(text("query-node")).toBe("31");
    expect(text("labeled-count")).toBe("8");
  });

  it("skips polling while a label is in flight", async () => {
    const api = new FakeApi();
    let release!: (r: LabelResponse) => void;
    api.labelHandler = () => new Promise((resolve) => (release = resolve));
    const started = await openApp(api);
    const before = api.getSessionCalls;

    pressKey("1");
    await started.pollTick();
    expect(api.getSessionCalls).toBe(before);

    release({
      session_id: "s1",
      step: 4,
      node: 17,
      label: 0,
      labeled_count: 4,
      pool_remaining: 46,
      next_query: makeQuery({ node: 18 }),
    });
    await started.idle();
  });
});
