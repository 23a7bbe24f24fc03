/**
 * Browser entry point: session setup form, chat console, and the trace
 * inspector for any engine turn. State is re-derived from service responses
 * after every mutation (no optimistic updates).
 */

import { ApiClient, ApiError, type TraceDoc } from "./api.js";
import { chatView, type ChatState } from "./chat.js";
import { traceView } from "./trace.js";
import { h, replaceChildren, type VNode } from "./vdom.js";

interface AppState extends ChatState {
  models: { id: string; vocab: string[] }[];
  modelId: string;
  partner: string;
  steps: number;
  width: number;
  selfContext: string;
  partnerContext: string;
  trace: TraceDoc | null;
  traceTurn: number | null;
}

function serviceBase(): string {
  const override = new URLSearchParams(window.location.search).get("service");
  if (override) return override;
  if (window.location.origin.startsWith("file")) return "http://127.0.0.1:8000";
  return window.location.origin;
}

const client = new ApiClient(serviceBase());

const state: AppState = {
  models: [],
  modelId: "f2",
  partner: "transparent",
  steps: 1,
  width: 2,
  selfContext: "c1",
  partnerContext: "c2",
  session: null,
  draft: "",
  pending: false,
  error: null,
  trace: null,
  traceTurn: null,
};

function vocabFor(modelId: string): string[] {
  return state.models.find((m) => m.id === modelId)?.vocab ?? [];
}

async function refreshSession(id: string): Promise<void> {
  state.session = await client.getSession(id);
}

async function startSession(): Promise<void> {
  state.error = null;
  state.pending = true;
  render();
  try {
    const session = await client.createSession({
      model: state.modelId,
      partner: state.partner,
      steps: state.steps,
      width: state.width,
      max_tokens: 2,
      self_context: state.selfContext ? [state.selfContext] : [],
      partner_context: state.partnerContext ? [state.partnerContext] : [],
    });
    state.session = session;
    await showTrace(session.traces.length - 1);
  } catch (error) {
    state.error = error instanceof ApiError ? error.detail : String(error);
  } finally {
    state.pending = false;
    render();
  }
}

async function sendDraft(): Promise<void> {
  const session = state.session;
  if (session === null || !state.draft.trim()) return;
  state.error = null;
  state.pending = true;
  render();
  try {
    const posted = await client.postUtterance(
      session.id,
      state.draft,
      session.conversation.utterances.length,
    );
    state.draft = "";
    await refreshSession(session.id);
    await showTrace(posted.trace_index);
  } catch (error) {
    state.error = error instanceof ApiError ? error.detail : String(error);
  } finally {
    state.pending = false;
    render();
  }
}

async function showTrace(turn: number): Promise<void> {
  const session = state.session;
  if (session === null) return;
  try {
    state.trace = await client.getTrace(session.id, turn);
    state.traceTurn = turn;
  } catch {
    state.trace = null;
    state.traceTurn = null;
  }
  render();
}

function setupView(): VNode {
  const field = (label: string, input: VNode): VNode =>
    h("label", { class: "field" }, h("span", {}, label), input);
  return h(
    "div",
    { class: "setup" },
    field(
      "model",
      h(
        "select",
        {
          change: (e: Event) => {
            state.modelId = (e.target as HTMLSelectElement).value;
          },
        },
        state.models.map((m) =>
          h("option", m.id === state.modelId ? { value: m.id, selected: true } : { value: m.id }, m.id),
        ),
      ),
    ),
    field(
      "partner",
      h(
        "select",
        {
          change: (e: Event) => {
            state.partner = (e.target as HTMLSelectElement).value;
          },
        },
        ["mindless", "egocentric", "transparent"].map((kind) =>
          h("option", kind === state.partner ? { value: kind, selected: true } : { value: kind }, kind),
        ),
      ),
    ),
    field("lookahead", numberInput(state.steps, (v) => (state.steps = v))),
    field("width", numberInput(state.width, (v) => (state.width = v))),
    field("self context", textInput(state.selfContext, (v) => (state.selfContext = v))),
    field("partner context", textInput(state.partnerContext, (v) => (state.partnerContext = v))),
    h("button", { class: "start", click: () => void startSession() }, "new session"),
  );
}

function numberInput(value: number, set: (v: number) => void): VNode {
  return h("input", {
    type: "number",
    value: String(value),
    input: (e: Event) => set(Number((e.target as HTMLInputElement).value)),
  });
}

function textInput(value: string, set: (v: string) => void): VNode {
  return h("input", {
    type: "text",
    value,
    input: (e: Event) => set((e.target as HTMLInputElement).value),
  });
}

function traceTabs(): VNode | null {
  const session = state.session;
  if (session === null || session.traces.length === 0) return null;
  return h(
    "div",
    { class: "trace-tabs" },
    session.traces.map((_, turn) =>
      h(
        "button",
        {
          class: turn === state.traceTurn ? "tab active" : "tab",
          click: () => void showTrace(turn),
        },
        `turn ${turn}`,
      ),
    ),
  );
}

function appView(): VNode {
  return h(
    "div",
    { class: "app" },
    h("h1", {}, "convsearch inspector"),
    setupView(),
    chatView(state, vocabFor(state.session ? String(state.session.config["model"]) : state.modelId), {
      onDraft: (text) => {
        state.draft = text;
      },
      onSend: () => void sendDraft(),
    }),
    h("h2", {}, "lookahead trace"),
    traceTabs(),
    traceView(state.trace),
  );
}

function render(): void {
  const root = document.getElementById("app");
  if (root) replaceChildren(appView(), root);
}

async function init(): Promise<void> {
  try {
    state.models = await client.listModels();
  } catch (error) {
    state.error = `service unreachable: ${String(error)}`;
  }
  render();
}

void init();
