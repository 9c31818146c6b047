/** Thin typed client over the service's request/response endpoints.
 *
 * Every method resolves to a ServiceResult; rejections never throw, they
 * carry the service's machine-readable reason code so views can render it
 * verbatim.  Network failures surface as code "network_error".
 */

import type {
  ServiceResult,
  SettlementView,
  Side,
  SnapshotMessage,
  StateMessage,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface AcceptedSubmission {
  accepted: boolean;
  seq: number;
  t?: number;
}

export class ServiceClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(
    method: "GET" | "POST",
    path: string,
    body?: unknown,
  ): Promise<ServiceResult<T>> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      return { ok: false, code: "network_error", detail: String(err) };
    }
    let payload: unknown = null;
    try {
      payload = await response.json();
    } catch {
      return { ok: false, code: "bad_response", detail: `status ${response.status}` };
    }
    if (!response.ok) {
      const rejection = payload as { error?: string; detail?: string };
      return {
        ok: false,
        code: rejection.error ?? `http_${response.status}`,
        detail: rejection.detail ?? "",
      };
    }
    return { ok: true, data: payload as T };
  }

  createGame(blue: string, red: string, budget?: number, gameId?: string) {
    return this.request<{ game_id: string; state: string; budget: number }>("POST", "/games", {
      blue,
      red,
      budget,
      game_id: gameId,
    });
  }

  openPreferences(gameId: string) {
    return this.request<StateMessage>("POST", `/games/${gameId}/open`);
  }

  startGame(gameId: string) {
    return this.request<StateMessage>("POST", `/games/${gameId}/start`);
  }

  endGame(gameId: string) {
    return this.request<StateMessage>("POST", `/games/${gameId}/end`);
  }

  declareOutcome(gameId: string, winner: "blue" | "red") {
    return this.request<StateMessage>("POST", `/games/${gameId}/outcome`, { winner });
  }

  submitPreference(gameId: string, subjectId: string, side: Side) {
    return this.request<AcceptedSubmission>("POST", `/games/${gameId}/preference`, {
      subject_id: subjectId,
      side,
    });
  }

  submitPrior(gameId: string, subjectId: string, p: number) {
    return this.request<AcceptedSubmission>("POST", `/games/${gameId}/prior`, {
      subject_id: subjectId,
      p,
    });
  }

  submitUpdate(gameId: string, subjectId: string, p: number) {
    return this.request<AcceptedSubmission>("POST", `/games/${gameId}/update`, {
      subject_id: subjectId,
      p,
    });
  }

  submitRating(gameId: string, subjectId: string, rating: number) {
    return this.request<AcceptedSubmission>("POST", `/games/${gameId}/rating`, {
      subject_id: subjectId,
      rating,
    });
  }

  gameState(gameId: string) {
    return this.request<StateMessage>("GET", `/games/${gameId}/state`);
  }

  snapshot(gameId: string) {
    return this.request<SnapshotMessage>("GET", `/games/${gameId}/snapshot`);
  }

  settlement(gameId: string) {
    return this.request<SettlementView>("GET", `/games/${gameId}/settlement`);
  }
}
