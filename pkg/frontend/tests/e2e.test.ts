/**
 * End-to-end: three scripted judges drive the real service through the UI's
 * session machinery until a 2-query, 2-round campaign completes, then the
 * export is checked against every intended (pre-flip) label.
 */

import { describe, expect, it } from "vitest";

import { PairRankApi } from "../src/api.js";
import { JudgeSession } from "../src/session.js";
import { E2E_BASE, E2E_CAMPAIGN, intendedLabel } from "./e2e_constants.js";

interface IntendedRecord {
  pairId: string;
  judgeId: string;
  canonical: number;
}

function driveJudge(
  api: PairRankApi,
  name: string,
  intended: IntendedRecord[],
  roundsSeen: Map<string, number>,
): Promise<void> {
  return new Promise((resolve, reject) => {
    const session: JudgeSession = new JudgeSession(api, E2E_CAMPAIGN, {
      pollMs: 25,
      judgeName: name,
      onChange: (state) => {
        if (state.kind === "presenting") {
          const pres = state.presentation;
          const [, left, right] = pres.pair_id.split(":");
          const shownLeft = pres.left_image.split("/").pop();
          const flipped = shownLeft === right;
          const canonical = intendedLabel(left, right);
          const raw = flipped ? 4 - canonical : canonical;
          intended.push({
            pairId: pres.pair_id,
            judgeId: session.judgeId,
            canonical,
          });
          roundsSeen.set(pres.pair_id, pres.round);
          queueMicrotask(() => void session.choose(raw).catch(reject));
        } else if (state.kind === "done") {
          resolve();
        }
      },
    });
    session.start().catch(reject);
  });
}

describe("live campaign", () => {
  it("completes two rounds and exports exactly the intended labels", async () => {
    const api = new PairRankApi(E2E_BASE);
    const intended: IntendedRecord[] = [];
    const roundsSeen = new Map<string, number>();
    await Promise.all([
      driveJudge(api, "judge-one", intended, roundsSeen),
      driveJudge(api, "judge-two", intended, roundsSeen),
      driveJudge(api, "judge-three", intended, roundsSeen),
    ]);

    const status = await api.status(E2E_CAMPAIGN);
    expect(status.done).toBe(true);
    expect(status.judgments_total).toBe(intended.length);
    // 2 queries x floor(4/2) pairs x 2 rounds x 3 judges
    expect(intended.length).toBe(24);

    const rounds = new Map<number, Set<string>>();
    for (const [pairId, round] of roundsSeen) {
      if (!rounds.has(round)) rounds.set(round, new Set());
      rounds.get(round)!.add(pairId);
    }
    expect([...rounds.keys()].sort()).toEqual([1, 2]);
    expect(rounds.get(1)!.size).toBe(4);
    expect(rounds.get(2)!.size).toBe(4);
    for (const pairId of rounds.get(2)!) {
      expect(rounds.get(1)!.has(pairId)).toBe(false);
    }

    const exportText = await (await fetch(api.exportUrl(E2E_CAMPAIGN))).text();
    const lines = exportText.trim().split("\n");
    expect(lines[0]).toBe("#pairrank-judgments v1");
    const header = lines[1].split("\t");
    const rows = lines.slice(2).map((line) => {
      const cells = line.split("\t");
      return Object.fromEntries(header.map((key, i) => [key, cells[i]]));
    });
    expect(rows).toHaveLength(intended.length);

    const byKey = new Map(
      intended.map((r) => [`${r.pairId}|${r.judgeId}`, r.canonical]));
    for (const row of rows) {
      const want = byKey.get(`${row.pair_id}|${row.judge_id}`);
      expect(want).toBeDefined();
      // the involution: a flipped presentation was submitted pre-flipped, so
      // the stored canonical label equals the intent exactly
      expect(Number(row.label)).toBe(want);
    }
  }, 60000);
});
