import { ApiClient, toApiError } from "./api.js";
import type { ConfigOverrides, SessionTurn } from "./types.js";

// Client-side session state: ordered turns, the current config overrides,
// and a one-in-flight queue (subsequent asks wait their turn).
export class SessionStore {
  private turns: SessionTurn[] = [];
  private queue: string[] = [];
  private inFlight = false;
  private config: ConfigOverrides = {};

  constructor(private api: ApiClient, private onChange: () => void = () => {}) {}

  getTurns(): readonly SessionTurn[] {
    return this.turns;
  }

  getConfig(): Readonly<ConfigOverrides> {
    return { ...this.config };
  }

  setConfig(partial: ConfigOverrides): void {
    this.config = { ...this.config, ...partial };
  }

  get busy(): boolean {
    return this.inFlight;
  }

  get pending(): number {
    return this.queue.length;
  }

  // Enqueue a question; resolves once the whole queue has drained.
  async ask(question: string): Promise<void> {
    this.queue.push(question);
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      while (this.queue.length > 0) {
        const next = this.queue.shift();
        if (next === undefined) break;
        await this.runOne(next);
      }
    } finally {
      this.inFlight = false;
      this.onChange();
    }
  }

  private async runOne(question: string): Promise<void> {
    const snapshot: Readonly<ConfigOverrides> = Object.freeze({ ...this.config });
    const turn: SessionTurn = {
      question,
      config: snapshot,
      response: null,
      error: null,
      scores: null,
      scoresError: null,
      scoring: false,
    };
    try {
      turn.response = await this.api.ask({ question, overrides: snapshot });
    } catch (err) {
      turn.error = toApiError(err);
    }
    this.turns.push(turn);
    this.onChange();
  }

  // On-demand metric badges for an existing turn; scores come only from the
  // API, never computed here.
  async score(turnIndex: number): Promise<void> {
    const turn = this.turns[turnIndex];
    if (!turn || !turn.response || turn.scoring) return;
    turn.scoring = true;
    turn.scoresError = null;
    this.onChange();
    try {
      turn.scores = await this.api.score({
        question: turn.question,
        answer: turn.response.answer,
        chunks: turn.response.chunks.map((c) => c.text),
      });
    } catch (err) {
      turn.scoresError = toApiError(err);
    } finally {
      turn.scoring = false;
      this.onChange();
    }
  }
}
