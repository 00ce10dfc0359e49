import { ApiClient } from "./api.js";
import { renderTurns } from "./render.js";
import { SessionStore } from "./session.js";
import type { ConfigOverrides } from "./types.js";

const api = new ApiClient((url, init) => fetch(url, init));

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const turnsBox = el<HTMLDivElement>("turns");
const form = el<HTMLFormElement>("ask-form");
const questionInput = el<HTMLTextAreaElement>("question");
const statusLine = el<HTMLSpanElement>("status");

const store = new SessionStore(api, () => {
  turnsBox.innerHTML = renderTurns(store.getTurns());
  statusLine.textContent = store.busy
    ? (store.pending > 0 ? `working… (${store.pending} queued)` : "working…")
    : "";
  turnsBox.scrollTop = turnsBox.scrollHeight;
});

function readConfig(): ConfigOverrides {
  const overrides: ConfigOverrides = {};
  const retrieval = el<HTMLSelectElement>("retrieval").value;
  const prompt = el<HTMLSelectElement>("prompt").value;
  const strategy = el<HTMLSelectElement>("chunk-strategy").value;
  const chunkK = el<HTMLInputElement>("chunk-k").value;
  const abstractK = el<HTMLInputElement>("abstract-k").value;
  if (retrieval) overrides.retrieval = retrieval;
  if (prompt) overrides.prompt = prompt;
  if (strategy) overrides.chunk_strategy = strategy;
  if (chunkK) overrides.chunk_k = Number(chunkK);
  if (abstractK) overrides.abstract_k = Number(abstractK);
  return overrides;
}

for (const id of ["retrieval", "prompt", "chunk-strategy", "chunk-k", "abstract-k"]) {
  el(id).addEventListener("change", () => store.setConfig(readConfig()));
}

form.addEventListener("submit", (event) => {
  event.preventDefault();
  const question = questionInput.value.trim();
  if (!question) return;
  questionInput.value = "";
  store.setConfig(readConfig());
  void store.ask(question);
});

turnsBox.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  if (target.matches("button.score-btn")) {
    void store.score(Number(target.dataset.turn));
  }
});

async function boot(): Promise<void> {
  try {
    const configs = await api.configs();
    const fill = (id: string, values: string[], current: string) => {
      const select = el<HTMLSelectElement>(id);
      select.innerHTML = values
        .map((v) => `<option value="${v}"${v === current ? " selected" : ""}>${v}</option>`)
        .join("");
    };
    fill("retrieval", configs.retrieval_modes, configs.default.retrieval);
    fill("prompt", configs.prompt_variants, configs.default.prompt);
    fill("chunk-strategy", configs.chunk_strategies, configs.default.chunk_strategy);
    el<HTMLInputElement>("chunk-k").value = String(configs.default.chunk_k);
    el<HTMLInputElement>("abstract-k").value = String(configs.default.abstract_k);
    store.setConfig(readConfig());
  } catch {
    statusLine.textContent = "could not load /api/configs (using server defaults)";
  }
  try {
    const stats = await api.corpusStats();
    el("corpus-line").textContent =
      `${stats.articles} articles · ${stats.clean_documents} clean docs · ` +
      Object.entries(stats.chunks).map(([k, v]) => `${v} ${k} chunks`).join(" · ");
  } catch {
    el("corpus-line").textContent = "corpus stats unavailable";
  }
}

void boot();
