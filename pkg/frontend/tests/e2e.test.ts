/** End-to-end: the real service process, driven through the same views a
 * browser would render.  One scripted subject completes preference, prior,
 * three slider updates, and a rating, with every verdict rendered; the
 * operator dashboard ends the game and settles, and the payout table must
 * total the game budget.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";
import WebSocket from "ws";

import { ServiceClient } from "../src/api.js";
import { OperatorDashboard } from "../src/operator.js";
import { SubjectSessionView } from "../src/subject.js";
import type { SocketFactory } from "../src/socket.js";

const BUDGET = 20;

let proc: ChildProcess;
let base: string;
let client: ServiceClient;

const wsFactory: SocketFactory = (url) => new WebSocket(url) as never;

async function freePort(): Promise<number> {
  return new Promise((resolve) => {
    const server = createServer();
    server.listen(0, "127.0.0.1", () => {
      const port = (server.address() as { port: number }).port;
      server.close(() => resolve(port));
    });
  });
}

async function waitForService(): Promise<void> {
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    try {
      const r = await fetch(`${base}/games/probe/state`);
      if (r.status === 404 || r.status === 200) return;
    } catch {
      await new Promise((r) => setTimeout(r, 100));
    }
  }
  throw new Error("service did not come up");
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

beforeAll(async () => {
  const port = await freePort();
  const dir = mkdtempSync(join(tmpdir(), "surpriseflow-ui-"));
  const configPath = join(dir, "config.json");
  writeFileSync(
    configPath,
    JSON.stringify({
      bind: "127.0.0.1",
      port,
      data_dir: join(dir, "data"),
      broadcast_interval: 0.1,
      default_budget: BUDGET,
    }),
  );
  proc = spawn("python3", ["-m", "surpriseflow", "serve", "--config", configPath], {
    stdio: "ignore",
  });
  base = `http://127.0.0.1:${port}`;
  client = new ServiceClient(base);
  await waitForService();
});

afterAll(() => {
  proc?.kill("SIGKILL");
});

describe("scripted session against the live service", () => {
  it("subject flow and operator settlement agree with the budget", async () => {
    const created = await client.createGame("G2", "SN", BUDGET, "e2e1");
    expect(created.ok).toBe(true);

    const operatorRoot = document.createElement("div");
    document.body.appendChild(operatorRoot);
    const operator = new OperatorDashboard(operatorRoot, client, "e2e1", {
      socketFactory: wsFactory,
    });
    await operator.mount();

    const subjectRoot = document.createElement("div");
    document.body.appendChild(subjectRoot);
    const subject = new SubjectSessionView(subjectRoot, client, "e2e1", "tok-main", {
      socketFactory: wsFactory,
    });
    await subject.mount();

    (operatorRoot.querySelector(".op-open") as HTMLButtonElement).click();
    await vi.waitFor(() =>
      expect((operatorRoot.querySelector(".stage-line") as HTMLElement).textContent).toBe(
        "preferences_open",
      ),
    );
    // the push channel tells the subject view preferences opened
    await vi.waitFor(() => {
      expect(
        (subjectRoot.querySelector(".prior-submit") as HTMLButtonElement).disabled,
      ).toBe(false);
    });

    (subjectRoot.querySelector('[data-side="blue"]') as HTMLButtonElement).click();
    await vi.waitFor(() => expect(subject.history).toHaveLength(1));
    (subjectRoot.querySelector(".prior-input") as HTMLInputElement).value = "40";
    (subjectRoot.querySelector(".prior-submit") as HTMLButtonElement).click();
    await vi.waitFor(() => expect(subject.history).toHaveLength(2));

    // two scripted companions so the settlement has a real split
    for (const [sid, p] of [
      ["tok-b", 0.5],
      ["tok-c", 0.9],
    ] as const) {
      expect((await client.submitPreference("e2e1", sid, "red")).ok).toBe(true);
      expect((await client.submitPrior("e2e1", sid, p)).ok).toBe(true);
    }

    (operatorRoot.querySelector(".op-start") as HTMLButtonElement).click();
    await vi.waitFor(() =>
      expect(
        (subjectRoot.querySelector(".belief-submit") as HTMLButtonElement).disabled,
      ).toBe(false),
    );

    const slider = subjectRoot.querySelector(".belief-slider") as HTMLInputElement;
    const send = subjectRoot.querySelector(".belief-submit") as HTMLButtonElement;
    for (const percent of ["80", "50", "0"]) {
      slider.value = percent;
      send.click();
      const expected = 2 + ["80", "50", "0"].indexOf(percent) + 1;
      await vi.waitFor(() => expect(subject.history).toHaveLength(expected));
      await sleep(15); // updates must carry distinct millisecond timestamps
    }

    // live median snapshot reaches the dashboard over the push channel
    await vi.waitFor(
      () => {
        expect(
          (operatorRoot.querySelector(".subject-count") as HTMLElement).textContent,
        ).toBe("3");
      },
      { timeout: 5000 },
    );

    (operatorRoot.querySelector(".op-end") as HTMLButtonElement).click();
    await vi.waitFor(() =>
      expect(
        (subjectRoot.querySelector(".rating-submit") as HTMLButtonElement).disabled,
      ).toBe(false),
    );
    (subjectRoot.querySelector(".rating-select") as HTMLSelectElement).value = "7";
    (subjectRoot.querySelector(".rating-submit") as HTMLButtonElement).click();
    await vi.waitFor(() => expect(subject.history).toHaveLength(6));

    expect(subject.history.map((h) => h.verdict)).toEqual(Array(6).fill("accepted"));
    const items = Array.from(subjectRoot.querySelectorAll(".history li"));
    expect(items).toHaveLength(6);
    expect(items.every((li) => li.textContent?.endsWith("accepted"))).toBe(true);

    const outcome = operatorRoot.querySelector(".outcome-select") as HTMLSelectElement;
    outcome.value = "red";
    (operatorRoot.querySelector(".op-declare") as HTMLButtonElement).click();
    await sleep(50);
    (operatorRoot.querySelector(".op-settle") as HTMLButtonElement).click();
    await vi.waitFor(() =>
      expect(operatorRoot.querySelectorAll(".settlement tbody tr")).toHaveLength(3),
    );
    const total = (operatorRoot.querySelector(".settlement-total") as HTMLElement).textContent;
    expect(total).toBe(BUDGET.toFixed(2));
    await vi.waitFor(() =>
      expect((operatorRoot.querySelector(".stage-line") as HTMLElement).textContent).toBe(
        "settled",
      ),
    );

    operator.unmount();
    subject.unmount();
  });

  it("rejected submissions render the server's code verbatim", async () => {
    expect((await client.createGame("A", "B", 5, "e2e2")).ok).toBe(true);
    const root = document.createElement("div");
    document.body.appendChild(root);
    const view = new SubjectSessionView(root, client, "e2e2", "tok-x", {
      connectPush: false,
    });
    await view.mount();
    await view.commitSlider(); // game not live yet
    expect(view.history[0]?.verdict).toBe("wrong_state");
    const li = root.querySelector(".history li") as HTMLLIElement;
    expect(li.textContent).toContain("wrong_state");
  });
});
