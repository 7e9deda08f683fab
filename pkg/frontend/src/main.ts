/**
 * DOM wiring: five fixed judgment buttons, side-by-side images, progress.
 *
 * Buttons keep a fixed left-to-right order and the pressed index is the raw
 * on-screen label; keys 1..5 mirror the buttons.  Images are letterboxed to
 * equal display height via CSS so size differences do not dominate the
 * comparison (display-only; the data is untouched).
 */

import { ApiClient, PairRankApi } from "./api.js";
import { progressView } from "./progress.js";
import { JudgeSession, SessionState } from "./session.js";

export const BUTTON_LABELS = [
  "left better",
  "left slightly better",
  "equal",
  "right slightly better",
  "right better",
];

export interface AppConfig {
  baseUrl: string;
  campaignId: string;
  pollMs?: number;
  api?: ApiClient;
  storage?: Pick<Storage, "getItem" | "setItem">;
}

export interface App {
  session: JudgeSession;
  elements: Record<string, HTMLElement>;
}

function requireElement(doc: Document, id: string): HTMLElement {
  const el = doc.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

export function initApp(doc: Document, config: AppConfig): App {
  const api = config.api ?? new PairRankApi(config.baseUrl);
  const elements = {
    left: requireElement(doc, "left-image"),
    right: requireElement(doc, "right-image"),
    buttons: requireElement(doc, "buttons"),
    banner: requireElement(doc, "state-banner"),
    retry: requireElement(doc, "retry-button"),
    round: requireElement(doc, "progress-round"),
    judged: requireElement(doc, "progress-judged"),
    remaining: requireElement(doc, "progress-remaining"),
    exportLink: requireElement(doc, "export-link"),
  };

  const buttons: HTMLButtonElement[] = BUTTON_LABELS.map((text, index) => {
    const button = doc.createElement("button");
    button.textContent = text;
    button.dataset.label = String(index);
    button.disabled = true;
    elements.buttons.appendChild(button);
    return button;
  });

  const storageKey = `pairrank-judge:${config.campaignId}`;
  const storage = config.storage ?? window.localStorage;
  const storedJudge = storage.getItem(storageKey) ?? undefined;

  const session = new JudgeSession(api, config.campaignId, {
    pollMs: config.pollMs,
    judgeId: storedJudge,
    onChange: render,
    onStatus: (status) => {
      const view = progressView(status, api.exportUrl(config.campaignId));
      elements.round.textContent = view.roundLabel;
      elements.judged.textContent = view.judgedLabel;
      elements.remaining.textContent = view.remainingLabel;
      if (view.exportUrl) {
        elements.exportLink.setAttribute("href", view.exportUrl);
        elements.exportLink.style.display = "";
      }
    },
  });

  function setButtonsEnabled(enabled: boolean): void {
    buttons.forEach((b) => (b.disabled = !enabled));
  }

  function render(state: SessionState): void {
    elements.retry.style.display = state.kind === "retry" ? "" : "none";
    switch (state.kind) {
      case "presenting":
        elements.left.setAttribute("src", state.presentation.left_image);
        elements.right.setAttribute("src", state.presentation.right_image);
        elements.banner.textContent =
          `round ${state.presentation.round}: which looks more attractive?`;
        setButtonsEnabled(true);
        break;
      case "submitting":
        setButtonsEnabled(false);
        elements.banner.textContent = "recording...";
        break;
      case "retry":
        setButtonsEnabled(false);
        elements.banner.textContent =
          `submission failed (${state.message}); your choice is kept`;
        break;
      case "waiting":
        setButtonsEnabled(false);
        elements.banner.textContent =
          "round complete for you; waiting for the other judges";
        break;
      case "done":
        setButtonsEnabled(false);
        elements.banner.textContent = "campaign complete, thank you";
        break;
      default:
        setButtonsEnabled(false);
    }
  }

  buttons.forEach((button, index) => {
    button.addEventListener("click", () => void session.choose(index));
  });
  elements.retry.addEventListener("click", () => void session.retry());
  doc.addEventListener("keydown", (event) => {
    const key = (event as KeyboardEvent).key;
    if (key >= "1" && key <= "5") {
      void session.choose(Number(key) - 1);
    }
  });

  void session.start().then(() => {
    if (session.judgeId) storage.setItem(storageKey, session.judgeId);
  });
  return { session, elements };
}
