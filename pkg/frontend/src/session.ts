/**
 * Judge session state machine, DOM-free.
 *
 * One session = one judge looping "fetch presentation, submit choice".  The
 * five button indices are submitted verbatim as the on-screen label; any
 * flip handling lives on the server.  A failed submission keeps the pending
 * choice for retry; a conflict (another tab or an expired presentation)
 * skips ahead; an exhausted round polls until the round advances.
 */

import { ApiClient, CampaignStatus, HttpError, Presentation } from "./api.js";

export type SessionState =
  | { kind: "idle" }
  | { kind: "presenting"; presentation: Presentation }
  | { kind: "submitting"; presentation: Presentation; label: number }
  | { kind: "retry"; presentation: Presentation; label: number; message: string }
  | { kind: "waiting" }
  | { kind: "done" };

export interface SessionOptions {
  pollMs?: number;
  judgeName?: string;
  judgeId?: string;
  onChange?: (state: SessionState) => void;
  onStatus?: (status: CampaignStatus) => void;
}

export class JudgeSession {
  state: SessionState = { kind: "idle" };
  judgeId = "";
  submitted = 0;
  private stopped = false;
  private pollTimer: ReturnType<typeof setTimeout> | null = null;
  private readonly pollMs: number;

  constructor(
    private readonly api: ApiClient,
    private readonly campaignId: string,
    private readonly options: SessionOptions = {},
  ) {
    this.pollMs = options.pollMs ?? 1500;
  }

  private setState(state: SessionState): void {
    this.state = state;
    this.options.onChange?.(state);
  }

  async start(): Promise<void> {
    this.judgeId = this.options.judgeId
      ?? (await this.api.registerJudge(this.options.judgeName));
    await this.advance();
  }

  stop(): void {
    this.stopped = true;
    if (this.pollTimer !== null) {
      clearTimeout(this.pollTimer);
      this.pollTimer = null;
    }
  }

  async refreshStatus(): Promise<void> {
    if (!this.options.onStatus) return;
    try {
      this.options.onStatus(await this.api.status(this.campaignId));
    } catch {
      // progress is cosmetic; a failed poll must not break judging
    }
  }

  async advance(): Promise<void> {
    if (this.stopped) return;
    await this.refreshStatus();
    let response;
    try {
      response = await this.api.next(this.campaignId, this.judgeId);
    } catch (err) {
      this.schedulePoll();
      return;
    }
    if (response.done) {
      this.setState({ kind: "done" });
      await this.refreshStatus(); // final counters and the export link
      this.stop();
      return;
    }
    if (!response.presentation) {
      this.setState({ kind: "waiting" });
      this.schedulePoll();
      return;
    }
    this.setState({ kind: "presenting", presentation: response.presentation });
  }

  private schedulePoll(): void {
    if (this.stopped) return;
    this.pollTimer = setTimeout(() => {
      this.pollTimer = null;
      void this.advance();
    }, this.pollMs);
  }

  /** Submit the pressed button index (0..4, left-to-right on screen). */
  async choose(label: number): Promise<void> {
    if (this.state.kind !== "presenting" && this.state.kind !== "retry") {
      return; // double presses while submitting are dropped
    }
    const presentation = this.state.presentation;
    this.setState({ kind: "submitting", presentation, label });
    try {
      await this.api.submit(presentation.presentation_id, this.judgeId, label);
      this.submitted += 1;
    } catch (err) {
      if (err instanceof HttpError && err.status === 409) {
        await this.advance(); // someone else closed this presentation: skip
        return;
      }
      this.setState({
        kind: "retry",
        presentation,
        label,
        message: err instanceof Error ? err.message : String(err),
      });
      return;
    }
    await this.advance();
  }

  /** Re-submit the choice preserved by a failed network call. */
  async retry(): Promise<void> {
    if (this.state.kind !== "retry") return;
    await this.choose(this.state.label);
  }
}
