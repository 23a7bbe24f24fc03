/**
 * Chat console view: transcript bubbles plus a composer with vocabulary
 * autocomplete. All rendered content comes verbatim from service payloads;
 * the composer is disabled while a reply is pending.
 */

import type { SessionDoc } from "./api.js";
import { h, type VNode } from "./vdom.js";

export interface ChatState {
  session: SessionDoc | null;
  draft: string;
  pending: boolean;
  error: string | null;
}

export interface ChatHandlers {
  onDraft(text: string): void;
  onSend(): void;
}

const noop: ChatHandlers = { onDraft: () => undefined, onSend: () => undefined };

export function chatView(state: ChatState, vocab: string[], handlers: ChatHandlers = noop): VNode {
  const session = state.session;
  const composerLocked =
    state.pending || session === null || session.next_speaker !== "partner";

  const bubbles = (session?.conversation.utterances ?? []).map((utt) =>
    h(
      "div",
      { class: `bubble ${utt.speaker}` },
      h("span", { class: "who" }, utt.speaker),
      h("span", { class: "utterance-text" }, utt.text),
    ),
  );

  return h(
    "div",
    { class: "chat" },
    h("div", { class: "transcript" }, bubbles),
    state.error !== null && h("div", { class: "error", role: "alert" }, state.error),
    h(
      "div",
      { class: "composer" },
      h("input", {
        class: "composer-input",
        list: "vocab-tokens",
        placeholder: "type tokens, space separated",
        value: state.draft,
        disabled: composerLocked,
        input: (event: Event) => handlers.onDraft((event.target as HTMLInputElement).value),
        keydown: (event: Event) => {
          if ((event as KeyboardEvent).key === "Enter" && !composerLocked) handlers.onSend();
        },
      }),
      h(
        "datalist",
        { id: "vocab-tokens" },
        vocab.map((token) => h("option", { value: token })),
      ),
      h(
        "button",
        {
          class: "send",
          disabled: composerLocked,
          click: () => handlers.onSend(),
        },
        state.pending ? "waiting..." : "send",
      ),
    ),
  );
}
