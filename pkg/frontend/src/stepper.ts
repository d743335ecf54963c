// Stage stepper shown across the top of the page.
//
// The stepper never moves on its own: every transition comes from a
// session view returned by the server, so its position is the server
// cursor by construction. Optimistic local stepping is deliberately
// absent; a failed commit must leave the stepper where the server is.

import type { SessionView, StageName, StageStatus } from "./api.js";
import { STAGE_ORDER } from "./api.js";

export interface StepBadge {
  name: StageName;
  index: number;
  state: "done" | "current" | "upcoming";
}

export class StageStepper {
  private cursor = 0;
  private complete = false;
  private committed: boolean[] = STAGE_ORDER.map(() => false);

  get position(): number {
    return this.cursor;
  }

  get isComplete(): boolean {
    return this.complete;
  }

  get currentStage(): StageName | null {
    return this.complete ? null : STAGE_ORDER[this.cursor];
  }

  // the one mutation path: adopt what the server said
  sync(view: SessionView): void {
    if (view.cursor < 0 || view.cursor > STAGE_ORDER.length) {
      throw new Error(`server cursor ${view.cursor} out of range`);
    }
    this.cursor = view.cursor;
    this.complete = view.status === "complete";
    this.committed = STAGE_ORDER.map((name) => {
      const stage = view.stages.find((s: StageStatus) => s.name === name);
      return stage !== undefined && stage.committed;
    });
  }

  badges(): StepBadge[] {
    return STAGE_ORDER.map((name, index) => ({
      name,
      index,
      state: this.committed[index] && index < this.cursor
        ? "done"
        : index === this.cursor && !this.complete
          ? "current"
          : "upcoming",
    }));
  }

  get canMove(): boolean {
    return !this.complete;
  }

  get canBack(): boolean {
    return this.cursor > 0;
  }

  backTargets(): number[] {
    const targets = [];
    for (let i = 0; i < this.cursor; i++) targets.push(i);
    return targets;
  }
}
