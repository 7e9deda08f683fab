export const E2E_PORT = 8462;
export const E2E_BASE = `http://127.0.0.1:${E2E_PORT}`;
export const E2E_CAMPAIGN = "e2e-camp";

export const E2E_MANIFEST = {
  campaign_id: E2E_CAMPAIGN,
  rounds: 2,
  judges_per_pair: 3,
  seed: 42,
  items: [0, 1].flatMap((q) =>
    [0, 1, 2, 3].map((k) => ({
      item_id: `q${q}x${k}`,
      query_id: `q${q}`,
    }))),
};

/** Planted preference: rank = trailing digit of the item id. */
export function intendedLabel(left: string, right: string): number {
  const rank = (id: string) => Number(id[id.length - 1]);
  const delta = rank(right) - rank(left);
  if (delta >= 2) return 4;
  if (delta === 1) return 3;
  if (delta === 0) return 2;
  if (delta === -1) return 1;
  return 0;
}
