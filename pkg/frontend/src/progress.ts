/** Read-only progress summary derived from the campaign status endpoint. */

import { CampaignStatus } from "./api.js";

export interface ProgressView {
  roundLabel: string;
  judgedLabel: string;
  remainingLabel: string;
  exportUrl: string | null;
  stale: boolean;
}

export function progressView(
  status: CampaignStatus | null,
  exportUrl: string,
): ProgressView {
  if (status === null) {
    return {
      roundLabel: "round ?",
      judgedLabel: "progress unavailable",
      remainingLabel: "",
      exportUrl: null,
      stale: true,
    };
  }
  if (status.done) {
    return {
      roundLabel: `done after round ${status.round}`,
      judgedLabel: `${status.judgments_total} judgments recorded`,
      remainingLabel: "campaign complete",
      exportUrl,
      stale: false,
    };
  }
  const remaining =
    status.judgments_needed_in_round - status.judgments_in_round;
  return {
    roundLabel: `round ${status.round} of ${status.rounds_target}`,
    judgedLabel:
      `${status.pairs_completed_in_round} / ${status.pairs_in_round} pairs complete` +
      ` (${status.judgments_in_round} judgments)`,
    remainingLabel: `${remaining} judgments remaining this round`,
    exportUrl: null,
    stale: false,
  };
}
