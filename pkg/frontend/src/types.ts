/** Wire types mirroring the elicitation service's HTTP and push payloads. */

export type Stage = "created" | "preferences_open" | "live" | "ended" | "settled";

export type Side = "blue" | "red" | "neutral";

export interface StateMessage {
  type: "state";
  game_id: string;
  state: Stage;
  blue: string;
  red: string;
  outcome: number | null;
}

export interface CurveData {
  start: number;
  end: number;
  breakpoints: number[];
  values: number[];
}

export interface SnapshotMessage {
  type: "snapshot";
  game_id: string;
  blue_probability: number;
  red_probability: number;
  n_subjects: number;
  elapsed: number;
  curve: CurveData;
}

export type PushMessage = StateMessage | SnapshotMessage;

export interface SettlementView {
  game_id: string;
  budget: number;
  mean_score: number;
  scores: Record<string, number>;
  rewards: Record<string, number>;
}

/** Normalized outcome of any service call: the reason code comes through verbatim. */
export type ServiceResult<T> =
  | { ok: true; data: T }
  | { ok: false; code: string; detail: string };

export function isStateMessage(msg: PushMessage): msg is StateMessage {
  return msg.type === "state";
}

export function isSnapshotMessage(msg: PushMessage): msg is SnapshotMessage {
  return msg.type === "snapshot";
}
