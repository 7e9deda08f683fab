import { describe, expect, it } from "vitest";

import { JudgeSession, SessionState } from "../src/session.js";
import { MockApi, presentation } from "./mock_api.js";

function waitFor(predicate: () => boolean, timeoutMs = 2000): Promise<void> {
  return new Promise((resolve, reject) => {
    const started = Date.now();
    const tick = () => {
      if (predicate()) return resolve();
      if (Date.now() - started > timeoutMs) return reject(new Error("timed out"));
      setTimeout(tick, 5);
    };
    tick();
  });
}

describe("JudgeSession", () => {
  it("submits the pressed label verbatim and fetches the next pair", async () => {
    const api = new MockApi();
    api.nextQueue = [
      { presentation: presentation("p1", "q:a:b"), waiting: false, done: false },
      { presentation: presentation("p2", "q:c:d"), waiting: false, done: false },
    ];
    const session = new JudgeSession(api, "c1", { pollMs: 5 });
    await session.start();
    expect(session.state.kind).toBe("presenting");
    await session.choose(2);
    expect(api.submissions).toEqual([
      { presentationId: "p1", judgeId: "judge-mock", label: 2 },
    ]);
    expect(session.state.kind).toBe("presenting");
    if (session.state.kind === "presenting") {
      expect(session.state.presentation.presentation_id).toBe("p2");
    }
    session.stop();
  });

  it("drops double presses while a submission is in flight", async () => {
    const api = new MockApi();
    api.nextQueue = [
      { presentation: presentation("p1", "q:a:b"), waiting: false, done: false },
    ];
    const session = new JudgeSession(api, "c1", { pollMs: 5 });
    await session.start();
    const first = session.choose(4);
    const second = session.choose(1); // ignored: not presenting anymore
    await Promise.all([first, second]);
    expect(api.submissions).toHaveLength(1);
    expect(api.submissions[0].label).toBe(4);
    session.stop();
  });

  it("keeps the pending choice across a network failure and retries it", async () => {
    const api = new MockApi();
    api.nextQueue = [
      { presentation: presentation("p1", "q:a:b"), waiting: false, done: false },
    ];
    api.networkFailures = 1;
    const states: SessionState[] = [];
    const session = new JudgeSession(api, "c1", {
      pollMs: 5,
      onChange: (s) => states.push(s),
    });
    await session.start();
    await session.choose(3);
    expect(session.state.kind).toBe("retry");
    if (session.state.kind === "retry") {
      expect(session.state.label).toBe(3);
    }
    expect(api.submissions).toHaveLength(0);
    await session.retry();
    expect(api.submissions).toEqual([
      { presentationId: "p1", judgeId: "judge-mock", label: 3 },
    ]);
    session.stop();
  });

  it("skips ahead on conflicts", async () => {
    const api = new MockApi();
    api.nextQueue = [
      { presentation: presentation("p1", "q:a:b"), waiting: false, done: false },
      { presentation: presentation("p2", "q:c:d"), waiting: false, done: false },
    ];
    api.conflictFailures = 1;
    const session = new JudgeSession(api, "c1", { pollMs: 5 });
    await session.start();
    await session.choose(0);
    expect(api.submissions).toHaveLength(0);
    expect(session.state.kind).toBe("presenting");
    if (session.state.kind === "presenting") {
      expect(session.state.presentation.presentation_id).toBe("p2");
    }
    session.stop();
  });

  it("waits through an exhausted round and resumes when it advances", async () => {
    const api = new MockApi();
    api.nextQueue = [
      { presentation: null, waiting: true, done: false },
      { presentation: null, waiting: true, done: false },
      { presentation: presentation("p9", "q:x:y", 2), waiting: false, done: false },
    ];
    const session = new JudgeSession(api, "c1", { pollMs: 5 });
    await session.start();
    expect(session.state.kind).toBe("waiting");
    await waitFor(() => session.state.kind === "presenting");
    session.stop();
  });

  it("reaches the done state and stops polling", async () => {
    const api = new MockApi();
    api.nextQueue = [
      { presentation: null, waiting: false, done: true },
    ];
    const session = new JudgeSession(api, "c1", { pollMs: 5 });
    await session.start();
    expect(session.state.kind).toBe("done");
  });

  it("reuses a provided judge id instead of registering", async () => {
    const api = new MockApi();
    api.nextQueue = [
      { presentation: presentation("p1", "q:a:b"), waiting: false, done: false },
    ];
    const session = new JudgeSession(api, "c1", { pollMs: 5, judgeId: "judge-keep" });
    await session.start();
    await session.choose(1);
    expect(api.submissions[0].judgeId).toBe("judge-keep");
    session.stop();
  });
});
