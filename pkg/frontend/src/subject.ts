/** Subject-facing session view: preference and prior before the game, the
 * belief slider while it runs, one rating afterwards.
 *
 * Controls enable exactly per the service state machine; every submission
 * lands in the history list with the service's verdict (accepted, or the
 * rejection code verbatim).  The slider reports whole percentage points.
 */

import type { ServiceClient } from "./api.js";
import { PushChannel, pushUrl, type SocketFactory } from "./socket.js";
import { SessionStore, subjectControls, type HistoryEntry, type SubjectProgress } from "./state.js";
import type { Side } from "./types.js";

const STAGE_LABELS: Record<string, string> = {
  created: "waiting for preferences to open",
  preferences_open: "before the game",
  live: "game in progress",
  ended: "game over - rate it",
  settled: "settled",
};

export interface SubjectViewOptions {
  socketFactory?: SocketFactory;
  connectPush?: boolean;
}

export class SubjectSessionView {
  readonly store = new SessionStore();
  readonly history: HistoryEntry[] = [];
  progress: SubjectProgress = { hasPreference: false, hasPrior: false, hasRated: false };

  private channel: PushChannel | null = null;
  private els!: {
    stage: HTMLParagraphElement;
    title: HTMLHeadingElement;
    prefButtons: HTMLButtonElement[];
    priorInput: HTMLInputElement;
    priorSubmit: HTMLButtonElement;
    slider: HTMLInputElement;
    sliderValue: HTMLOutputElement;
    sliderSubmit: HTMLButtonElement;
    ratingSelect: HTMLSelectElement;
    ratingSubmit: HTMLButtonElement;
    historyList: HTMLUListElement;
  };

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ServiceClient,
    readonly gameId: string,
    readonly subjectId: string,
    private readonly options: SubjectViewOptions = {},
  ) {}

  async mount(): Promise<void> {
    this.buildDom();
    this.store.subscribe(() => this.render());
    const state = await this.client.gameState(this.gameId);
    if (state.ok) {
      this.store.applyState(state.data);
    }
    if (this.options.connectPush !== false) {
      this.channel = new PushChannel(
        pushUrl(this.client.baseUrl, this.gameId),
        (msg) => this.store.apply(msg),
        {
          factory: this.options.socketFactory,
          onReconnect: () => void this.resync(),
        },
      );
      this.channel.connect();
    }
    this.render();
  }

  async resync(): Promise<void> {
    const state = await this.client.gameState(this.gameId);
    if (state.ok) {
      this.store.applyState(state.data);
    }
  }

  unmount(): void {
    this.channel?.close();
  }

  private buildDom(): void {
    this.root.innerHTML = `
      <section class="subject-view">
        <h2 class="match-title"></h2>
        <p class="stage-line"></p>
        <fieldset class="preference-box">
          <legend>Which team do you prefer?</legend>
          <button data-side="blue" type="button"></button>
          <button data-side="neutral" type="button">no preference</button>
          <button data-side="red" type="button"></button>
        </fieldset>
        <fieldset class="prior-box">
          <legend>Prior: chance the blue side wins (%)</legend>
          <input class="prior-input" type="number" min="0" max="100" step="1" value="50">
          <button class="prior-submit" type="button">submit prior</button>
        </fieldset>
        <fieldset class="belief-box">
          <legend>Live belief (%)</legend>
          <input class="belief-slider" type="range" min="0" max="100" step="1" value="50">
          <output class="belief-value">50%</output>
          <button class="belief-submit" type="button">send update</button>
        </fieldset>
        <fieldset class="rating-box">
          <legend>How much did you like the game? (1-9)</legend>
          <select class="rating-select"></select>
          <button class="rating-submit" type="button">submit rating</button>
        </fieldset>
        <h3>Your reports</h3>
        <ul class="history"></ul>
      </section>`;
    const q = <T extends Element>(sel: string) => this.root.querySelector(sel) as T;
    this.els = {
      title: q<HTMLHeadingElement>(".match-title"),
      stage: q<HTMLParagraphElement>(".stage-line"),
      prefButtons: Array.from(this.root.querySelectorAll<HTMLButtonElement>("[data-side]")),
      priorInput: q<HTMLInputElement>(".prior-input"),
      priorSubmit: q<HTMLButtonElement>(".prior-submit"),
      slider: q<HTMLInputElement>(".belief-slider"),
      sliderValue: q<HTMLOutputElement>(".belief-value"),
      sliderSubmit: q<HTMLButtonElement>(".belief-submit"),
      ratingSelect: q<HTMLSelectElement>(".rating-select"),
      ratingSubmit: q<HTMLButtonElement>(".rating-submit"),
      historyList: q<HTMLUListElement>(".history"),
    };
    for (let value = 1; value <= 9; value++) {
      const option = document.createElement("option");
      option.value = String(value);
      option.textContent = String(value);
      this.els.ratingSelect.appendChild(option);
    }
    for (const button of this.els.prefButtons) {
      button.addEventListener("click", () => {
        void this.submitPreference(button.dataset.side as Side);
      });
    }
    this.els.priorSubmit.addEventListener("click", () => void this.submitPrior());
    this.els.slider.addEventListener("input", () => {
      this.els.sliderValue.textContent = `${this.sliderPercent()}%`;
    });
    this.els.sliderSubmit.addEventListener("click", () => void this.commitSlider());
    this.els.ratingSubmit.addEventListener("click", () => void this.submitRating());
  }

  sliderPercent(): number {
    return Math.round(Number(this.els.slider.value));
  }

  async submitPreference(side: Side): Promise<void> {
    const result = await this.client.submitPreference(this.gameId, this.subjectId, side);
    if (result.ok) {
      this.progress.hasPreference = true;
    }
    this.pushHistory({
      action: "preference",
      value: side,
      verdict: result.ok ? "accepted" : result.code,
    });
  }

  async submitPrior(): Promise<void> {
    const percent = Math.round(Number(this.els.priorInput.value));
    const result = await this.client.submitPrior(this.gameId, this.subjectId, percent / 100);
    if (result.ok) {
      this.progress.hasPrior = true;
    }
    this.pushHistory({
      action: "prior",
      value: `${percent}%`,
      verdict: result.ok ? "accepted" : result.code,
    });
  }

  async commitSlider(): Promise<void> {
    const percent = this.sliderPercent();
    const result = await this.client.submitUpdate(this.gameId, this.subjectId, percent / 100);
    this.pushHistory({
      action: "update",
      value: `${percent}%`,
      verdict: result.ok ? "accepted" : result.code,
    });
  }

  async submitRating(): Promise<void> {
    const rating = Number(this.els.ratingSelect.value);
    const result = await this.client.submitRating(this.gameId, this.subjectId, rating);
    if (result.ok) {
      this.progress.hasRated = true;
    }
    this.pushHistory({
      action: "rating",
      value: String(rating),
      verdict: result.ok ? "accepted" : result.code,
    });
  }

  private pushHistory(entry: HistoryEntry): void {
    this.history.push(entry);
    const item = document.createElement("li");
    item.dataset.verdict = entry.verdict;
    item.textContent = `${entry.action} ${entry.value} - ${entry.verdict}`;
    this.els.historyList.appendChild(item);
    this.render();
  }

  render(): void {
    const state = this.store.current;
    const controls = subjectControls(state.stage, this.progress);
    this.els.title.textContent = state.blue ? `${state.blue} vs ${state.red}` : this.gameId;
    this.els.stage.textContent = state.stage ? STAGE_LABELS[state.stage] ?? state.stage : "connecting";
    const blueButton = this.els.prefButtons.find((b) => b.dataset.side === "blue");
    const redButton = this.els.prefButtons.find((b) => b.dataset.side === "red");
    if (blueButton) {
      blueButton.textContent = state.blue || "blue";
    }
    if (redButton) {
      redButton.textContent = state.red || "red";
    }
    for (const button of this.els.prefButtons) {
      button.disabled = !controls.preference;
    }
    this.els.priorInput.disabled = this.els.priorSubmit.disabled = !controls.prior;
    this.els.slider.disabled = this.els.sliderSubmit.disabled = !controls.slider;
    this.els.ratingSelect.disabled = this.els.ratingSubmit.disabled = !controls.rating;
  }
}
