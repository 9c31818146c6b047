/** Operator dashboard: drive the game lifecycle, watch the live median
 * curve, and settle the payout.
 *
 * Illegal transitions render the service's rejection code and leave the
 * displayed state untouched; the chart redraws on every snapshot broadcast
 * and resyncs from GET endpoints after a reconnect.
 */

import type { ServiceClient } from "./api.js";
import { CurveChart } from "./chart.js";
import { PushChannel, pushUrl, type SocketFactory } from "./socket.js";
import { SessionStore } from "./state.js";
import type { SettlementView } from "./types.js";

export interface OperatorViewOptions {
  socketFactory?: SocketFactory;
  connectPush?: boolean;
}

export class OperatorDashboard {
  readonly store = new SessionStore();
  private channel: PushChannel | null = null;
  private chart!: CurveChart;
  private els!: {
    title: HTMLHeadingElement;
    stage: HTMLParagraphElement;
    error: HTMLParagraphElement;
    subjects: HTMLSpanElement;
    buttons: Record<"open" | "start" | "end" | "settle", HTMLButtonElement>;
    outcomeSelect: HTMLSelectElement;
    declareButton: HTMLButtonElement;
    settlementBody: HTMLTableSectionElement;
    settlementTotal: HTMLTableCellElement;
  };

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ServiceClient,
    readonly gameId: string,
    private readonly options: OperatorViewOptions = {},
  ) {}

  async mount(): Promise<void> {
    this.buildDom();
    this.store.subscribe(() => this.render());
    await this.resync();
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
  }

  async resync(): Promise<void> {
    const state = await this.client.gameState(this.gameId);
    if (state.ok) {
      this.store.applyState(state.data);
    }
    const snapshot = await this.client.snapshot(this.gameId);
    if (snapshot.ok) {
      this.store.applySnapshot(snapshot.data);
    }
  }

  unmount(): void {
    this.channel?.close();
  }

  private buildDom(): void {
    this.root.innerHTML = `
      <section class="operator-view">
        <h2 class="match-title"></h2>
        <p class="stage-line"></p>
        <p class="error-line" role="alert"></p>
        <div class="lifecycle">
          <button class="op-open" type="button">open preferences</button>
          <button class="op-start" type="button">start game</button>
          <button class="op-end" type="button">end game</button>
          <select class="outcome-select">
            <option value="blue"></option>
            <option value="red"></option>
          </select>
          <button class="op-declare" type="button">declare winner</button>
          <button class="op-settle" type="button">settle</button>
        </div>
        <p>subjects reporting: <span class="subject-count">0</span></p>
        <svg class="median-chart"></svg>
        <table class="settlement">
          <thead><tr><th>subject</th><th>score</th><th>reward</th></tr></thead>
          <tbody></tbody>
          <tfoot><tr><td>total</td><td></td><td class="settlement-total"></td></tr></tfoot>
        </table>
      </section>`;
    const q = <T extends Element>(sel: string) => this.root.querySelector(sel) as T;
    this.els = {
      title: q<HTMLHeadingElement>(".match-title"),
      stage: q<HTMLParagraphElement>(".stage-line"),
      error: q<HTMLParagraphElement>(".error-line"),
      subjects: q<HTMLSpanElement>(".subject-count"),
      buttons: {
        open: q<HTMLButtonElement>(".op-open"),
        start: q<HTMLButtonElement>(".op-start"),
        end: q<HTMLButtonElement>(".op-end"),
        settle: q<HTMLButtonElement>(".op-settle"),
      },
      outcomeSelect: q<HTMLSelectElement>(".outcome-select"),
      declareButton: q<HTMLButtonElement>(".op-declare"),
      settlementBody: q<HTMLTableSectionElement>(".settlement tbody"),
      settlementTotal: q<HTMLTableCellElement>(".settlement-total"),
    };
    this.chart = new CurveChart(q<SVGSVGElement>(".median-chart"));
    this.els.buttons.open.addEventListener("click", () =>
      void this.transition(() => this.client.openPreferences(this.gameId)),
    );
    this.els.buttons.start.addEventListener("click", () =>
      void this.transition(() => this.client.startGame(this.gameId)),
    );
    this.els.buttons.end.addEventListener("click", () =>
      void this.transition(() => this.client.endGame(this.gameId)),
    );
    this.els.declareButton.addEventListener("click", () =>
      void this.transition(() =>
        this.client.declareOutcome(this.gameId, this.els.outcomeSelect.value as "blue" | "red"),
      ),
    );
    this.els.buttons.settle.addEventListener("click", () => void this.settle());
  }

  private async transition(call: () => ReturnType<ServiceClient["openPreferences"]>): Promise<void> {
    const result = await call();
    if (result.ok) {
      this.els.error.textContent = "";
      this.store.applyState(result.data);
    } else {
      this.els.error.textContent = result.code;
    }
  }

  async settle(): Promise<void> {
    const result = await this.client.settlement(this.gameId);
    if (!result.ok) {
      this.els.error.textContent = result.code;
      return;
    }
    this.els.error.textContent = "";
    this.renderSettlement(result.data);
    await this.resync();
  }

  private renderSettlement(settlement: SettlementView): void {
    this.els.settlementBody.innerHTML = "";
    let total = 0;
    for (const subject of Object.keys(settlement.rewards).sort()) {
      const row = document.createElement("tr");
      const reward = settlement.rewards[subject]!;
      total += reward;
      row.innerHTML = `<td>${subject}</td><td>${settlement.scores[subject]!.toFixed(4)}</td>` +
        `<td>${reward.toFixed(2)}</td>`;
      this.els.settlementBody.appendChild(row);
    }
    this.els.settlementTotal.textContent = total.toFixed(2);
  }

  render(): void {
    const state = this.store.current;
    this.els.title.textContent = state.blue ? `${state.blue} vs ${state.red}` : this.gameId;
    this.els.stage.textContent = state.stage ?? "connecting";
    const options = this.els.outcomeSelect.options;
    if (options[0] && options[1]) {
      options[0].textContent = state.blue || "blue";
      options[1].textContent = state.red || "red";
    }
    if (state.snapshot) {
      this.els.subjects.textContent = String(state.snapshot.n_subjects);
      this.chart.render(state.snapshot.curve);
    }
  }
}
