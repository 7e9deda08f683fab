/** Typed client for the labeling service JSON endpoints. */

export interface Presentation {
  presentation_id: string;
  pair_id: string;
  left_image: string;
  right_image: string;
  round: number;
  labels: string[];
}

export interface NextResponse {
  presentation: Presentation | null;
  waiting: boolean;
  done: boolean;
}

export interface JudgmentAck {
  pair_id: string;
  canonical_label: number;
  round_advanced: boolean;
  campaign_done: boolean;
}

export interface QueryStatus {
  query_id: string;
  rounds_completed: number;
  exhausted: boolean;
}

export interface CampaignStatus {
  campaign_id: string;
  round: number;
  rounds_target: number;
  judges_per_pair: number;
  done: boolean;
  pairs_in_round: number;
  pairs_completed_in_round: number;
  judgments_in_round: number;
  judgments_needed_in_round: number;
  judgments_total: number;
  queries: QueryStatus[];
}

export class HttpError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "HttpError";
  }
}

export interface ApiClient {
  registerJudge(name?: string): Promise<string>;
  next(campaignId: string, judgeId: string): Promise<NextResponse>;
  submit(presentationId: string, judgeId: string, label: number): Promise<JudgmentAck>;
  status(campaignId: string): Promise<CampaignStatus>;
  exportUrl(campaignId: string): string;
}

export class PairRankApi implements ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw new HttpError(response.status, await response.text());
    }
    return (await response.json()) as T;
  }

  async registerJudge(name?: string): Promise<string> {
    const body = JSON.stringify(name ? { name } : {});
    const data = await this.request<{ judge_id: string }>("/judges", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body,
    });
    return data.judge_id;
  }

  next(campaignId: string, judgeId: string): Promise<NextResponse> {
    const params = new URLSearchParams({ judge: judgeId });
    return this.request(`/campaigns/${campaignId}/next?${params}`);
  }

  submit(presentationId: string, judgeId: string, label: number): Promise<JudgmentAck> {
    return this.request("/judgments", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        presentation_id: presentationId,
        judge_id: judgeId,
        label,
      }),
    });
  }

  status(campaignId: string): Promise<CampaignStatus> {
    return this.request(`/campaigns/${campaignId}/status`);
  }

  exportUrl(campaignId: string): string {
    return `${this.baseUrl}/campaigns/${campaignId}/export`;
  }
}
