// Session controller: ties the stepper, the panes and the buttons to the
// HTTP client. One request in flight at a time; while `busy` is true the
// caller is expected to disable the controls.
//
// The lower pane shows the last committed output. The server does not
// re-serve intermediate outputs, so the controller remembers the image
// bytes of each commit: Move reuses the preview when the parameters have
// not changed since, and previews first when they have, so the cached
// pane always matches what was actually committed.

import { SessionApi, SessionView, StageParams } from "./api.js";
import { StageStepper } from "./stepper.js";

export type ConfirmBack = (fromStage: number, toStage: number) => boolean | Promise<boolean>;

interface PreviewMemo {
  cursor: number;
  paramsKey: string;
  image: Uint8Array;
}

const paramsKey = (cursor: number, params: StageParams): string =>
  `${cursor}:${JSON.stringify(params, Object.keys(params).sort())}`;

export class SessionController {
  readonly client: SessionApi;
  readonly stepper = new StageStepper();
  view: SessionView | null = null;
  busy = false;

  private lastPreview: PreviewMemo | null = null;
  private committedPanes: (Uint8Array | null)[] = [null, null, null, null];

  constructor(client: SessionApi) {
    this.client = client;
  }

  get sessionId(): string {
    if (this.view === null) throw new Error("no session open");
    return this.view.session_id;
  }

  // lower-pane bytes after the last commit/rollback; null right after a
  // page reload until the next preview runs
  committedPane(): Uint8Array | null {
    const cursor = this.stepper.position;
    for (let i = cursor - 1; i >= 0; i--) {
      if (this.committedPanes[i] !== null) return this.committedPanes[i];
    }
    return null;
  }

  private adopt(view: SessionView): SessionView {
    this.view = view;
    this.stepper.sync(view);
    return view;
  }

  private async exclusive<T>(work: () => Promise<T>): Promise<T> {
    if (this.busy) throw new Error("another request is in flight");
    this.busy = true;
    try {
      return await work();
    } finally {
      this.busy = false;
    }
  }

  async open(png: Uint8Array, preset = "default"): Promise<SessionView> {
    return this.exclusive(async () => this.adopt(await this.client.createSession(png, preset)));
  }

  async resume(sessionId: string): Promise<SessionView> {
    return this.exclusive(async () => {
      const view = await this.client.getSession(sessionId);
      this.lastPreview = null;
      this.committedPanes = [null, null, null, null];
      return this.adopt(view);
    });
  }

  async refresh(): Promise<SessionView> {
    return this.exclusive(async () => this.adopt(await this.client.getSession(this.sessionId)));
  }

  async uploadMask(png: Uint8Array): Promise<void> {
    return this.exclusive(async () => {
      await this.client.uploadMask(this.sessionId, png);
      this.adopt(await this.client.getSession(this.sessionId));
    });
  }

  // candidate image for the current stage; stepper position untouched
  async preview(params: StageParams): Promise<Uint8Array> {
    return this.exclusive(async () => {
      const image = await this.client.preview(this.sessionId, params);
      this.lastPreview = { cursor: this.stepper.position, paramsKey: paramsKey(this.stepper.position, params), image };
      return image;
    });
  }

  // the Move button: commit the current stage and advance
  async move(params: StageParams): Promise<SessionView> {
    return this.exclusive(async () => {
      const cursor = this.stepper.position;
      const key = paramsKey(cursor, params);
      let pane: Uint8Array;
      if (this.lastPreview !== null && this.lastPreview.paramsKey === key) {
        pane = this.lastPreview.image;
      } else {
        pane = await this.client.preview(this.sessionId, params);
      }
      const view = await this.client.commit(this.sessionId, params);
      this.committedPanes[cursor] = pane;
      this.lastPreview = null;
      return this.adopt(view);
    });
  }

  // the Back button: confirm, then roll the server back and drop the
  // cached panes for everything at and after the target
  async back(toStage: number, confirm: ConfirmBack): Promise<SessionView | null> {
    const from = this.stepper.position;
    if (!(await confirm(from, toStage))) return null;
    return this.exclusive(async () => {
      const view = await this.client.rollback(this.sessionId, toStage);
      for (let i = toStage; i < this.committedPanes.length; i++) {
        this.committedPanes[i] = null;
      }
      this.lastPreview = null;
      return this.adopt(view);
    });
  }

  async result(): Promise<Uint8Array> {
    return this.exclusive(async () => this.client.result(this.sessionId));
  }
}
