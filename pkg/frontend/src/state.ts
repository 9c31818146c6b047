/** Pure projection of service messages into view state.
 *
 * The store never invents values: stage, teams, outcome, and snapshots all
 * originate from a service response or a push-channel broadcast, plus the
 * subject's own accepted submissions.
 */

import {
  isSnapshotMessage,
  isStateMessage,
  type PushMessage,
  type SnapshotMessage,
  type Stage,
  type StateMessage,
} from "./types.js";

export interface SubjectProgress {
  hasPreference: boolean;
  hasPrior: boolean;
  hasRated: boolean;
}

export interface ControlFlags {
  preference: boolean;
  prior: boolean;
  slider: boolean;
  rating: boolean;
}

/** Which controls are live in each stage, mirroring the server's matrix:
 * preference/prior only while preferences are open (prior may be revised),
 * the belief slider only during the live game for subjects holding a prior,
 * the rating selector once after the game ends. */
export function subjectControls(stage: Stage | null, progress: SubjectProgress): ControlFlags {
  return {
    preference: stage === "preferences_open",
    prior: stage === "preferences_open",
    slider: stage === "live" && progress.hasPrior,
    rating: stage === "ended" && progress.hasPrior && !progress.hasRated,
  };
}

export interface HistoryEntry {
  action: "preference" | "prior" | "update" | "rating";
  value: string;
  verdict: "accepted" | string;
}

export interface SessionState {
  stage: Stage | null;
  blue: string;
  red: string;
  outcome: number | null;
  snapshot: SnapshotMessage | null;
}

export type Listener = (state: SessionState) => void;

export class SessionStore {
  private state: SessionState = {
    stage: null,
    blue: "",
    red: "",
    outcome: null,
    snapshot: null,
  };
  private listeners: Listener[] = [];

  get current(): SessionState {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  applyState(message: StateMessage): void {
    this.state = {
      ...this.state,
      stage: message.state,
      blue: message.blue,
      red: message.red,
      outcome: message.outcome,
    };
    this.emit();
  }

  applySnapshot(message: SnapshotMessage): void {
    this.state = { ...this.state, snapshot: message };
    this.emit();
  }

  apply(message: PushMessage): void {
    if (isStateMessage(message)) {
      this.applyState(message);
    } else if (isSnapshotMessage(message)) {
      this.applySnapshot(message);
    }
    // anything else is ignored: the UI renders only what the service said
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }
}
