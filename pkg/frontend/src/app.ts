// Browser wiring: two stacked panes (original above, working result
// below), the stage stepper, per-stage parameter forms, the mask canvas
// and the preview / Move / Back buttons. All state beyond what is on
// screen lives on the server; reloading the page and pasting the session
// id back reconstructs the same position.

import { RestoreClient, BackendInfo, StageParams, StageName } from "./api.js";
import { SessionController } from "./controller.js";
import { MaskLayer, screenToImage, StrokePoint } from "./mask.js";
import { stageFormSchema, validateParams, backendChoices, defaultParamsFor } from "./forms.js";
import { decodeGrayPng } from "./png.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const pngUrl = (bytes: Uint8Array): string =>
  URL.createObjectURL(new Blob([bytes as BlobPart], { type: "image/png" }));

class App {
  private controller!: SessionController;
  private catalog: BackendInfo[] = [];
  private mask: MaskLayer | null = null;
  private maskLocked = false;
  private brushRadius = 8;
  private drawing = false;
  private strokeTail: StrokePoint | null = null;
  private zoom = 1;

  async start(): Promise<void> {
    const base = ($("server-url") as HTMLInputElement).value || window.location.origin;
    this.controller = new SessionController(new RestoreClient(base));
    this.catalog = await this.controller.client.backends();

    $("photo-input").addEventListener("change", () => void this.onPhotoPicked());
    $("btn-preview").addEventListener("click", () => void this.onPreview());
    $("btn-move").addEventListener("click", () => void this.onMove());
    $("btn-back").addEventListener("click", () => void this.onBack());
    $("btn-clear-mask").addEventListener("click", () => this.onClearMask());
    $("btn-upload-mask").addEventListener("click", () => void this.onUploadMask());
    $("btn-resume").addEventListener("click", () => void this.onResume());

    const brush = $("brush-radius") as HTMLInputElement;
    brush.addEventListener("input", () => {
      this.brushRadius = Math.max(1, Number(brush.value) || 1);
    });
    const zoom = $("zoom") as HTMLInputElement;
    zoom.addEventListener("input", () => {
      this.zoom = Math.max(0.25, Number(zoom.value) || 1);
      this.redrawMaskCanvas();
    });
    this.bindCanvas();
    this.renderStepper();
  }

  private setStatus(text: string): void {
    $("status").textContent = text;
  }

  private async onPhotoPicked(): Promise<void> {
    const input = $("photo-input") as HTMLInputElement;
    const file = input.files && input.files[0];
    if (!file) return;
    const bytes = new Uint8Array(await file.arrayBuffer());
    const preset = ($("preset") as HTMLSelectElement).value;
    try {
      const view = await this.controller.open(bytes, preset);
      ($("session-id") as HTMLInputElement).value = view.session_id;
      const original = await this.controller.client.original(view.session_id);
      ($("pane-original") as HTMLImageElement).src = pngUrl(original);
      const probe = new Image();
      probe.onload = () => {
        this.mask = new MaskLayer(probe.naturalWidth, probe.naturalHeight);
        this.maskLocked = false;
        this.sizeMaskCanvas(probe.naturalWidth, probe.naturalHeight);
      };
      probe.src = pngUrl(original);
      this.renderAll();
      this.setStatus(`session ${view.session_id} created`);
    } catch (err) {
      this.showError(err);
    }
  }

  private async onResume(): Promise<void> {
    const sid = ($("session-id") as HTMLInputElement).value.trim();
    if (!sid) return;
    try {
      const view = await this.controller.resume(sid);
      const original = await this.controller.client.original(sid);
      ($("pane-original") as HTMLImageElement).src = pngUrl(original);
      this.maskLocked = view.cursor > 0;
      this.renderAll();
      this.setStatus(`resumed at stage ${view.cursor}`);
    } catch (err) {
      this.showError(err);
    }
  }

  private currentParams(): StageParams {
    const stage = (this.controller.stepper.currentStage ?? "damage") as StageName;
    const params = defaultParamsFor(stage, this.catalog);
    params.backend_id = ($("backend") as HTMLSelectElement).value || params.backend_id;
    params.strength = Number(($("strength") as HTMLInputElement).value);
    params.steps = Number(($("steps") as HTMLInputElement).value);
    params.guidance = Number(($("guidance") as HTMLInputElement).value);
    params.prompt = ($("prompt") as HTMLInputElement).value;
    params.checkpoint = ($("checkpoint") as HTMLInputElement).value;
    params.seed = Number(($("seed") as HTMLInputElement).value) || 0;
    if (stage === "face") {
      params.upscale = Number(($("upscale") as HTMLSelectElement).value) || 1;
    }
    return params;
  }

  private async onPreview(): Promise<void> {
    const stage = this.controller.stepper.currentStage;
    if (stage === null) return;
    const params = this.currentParams();
    const errors = validateParams(stage, params);
    if (errors.length > 0) {
      this.setStatus(errors.map((e) => e.message).join("; "));
      return;
    }
    try {
      this.setBusy(true);
      if (stage === "damage" && this.mask && !this.mask.isEmpty() && !this.maskLocked) {
        await this.controller.uploadMask(this.mask.toPng());
      }
      const image = await this.controller.preview(params);
      ($("pane-working") as HTMLImageElement).src = pngUrl(image);
      this.setStatus(`previewed ${stage}`);
    } catch (err) {
      this.showError(err);
    } finally {
      this.setBusy(false);
      this.renderAll();
    }
  }

  private async onMove(): Promise<void> {
    const stage = this.controller.stepper.currentStage;
    if (stage === null) return;
    const params = this.currentParams();
    const errors = validateParams(stage, params);
    if (errors.length > 0) {
      this.setStatus(errors.map((e) => e.message).join("; "));
      return;
    }
    try {
      this.setBusy(true);
      if (stage === "damage" && this.mask && !this.mask.isEmpty() && !this.maskLocked) {
        await this.controller.uploadMask(this.mask.toPng());
      }
      const view = await this.controller.move(params);
      if (stage === "damage") this.maskLocked = true;
      const pane = this.controller.committedPane();
      if (pane) ($("pane-working") as HTMLImageElement).src = pngUrl(pane);
      if (view.status === "complete") {
        const result = await this.controller.result();
        const url = pngUrl(result);
        ($("pane-working") as HTMLImageElement).src = url;
        const link = $("download-link") as HTMLAnchorElement;
        link.href = url;
        link.hidden = false;
        this.setStatus("all stages committed");
      } else {
        this.setStatus(`committed ${stage}`);
      }
    } catch (err) {
      this.showError(err);
    } finally {
      this.setBusy(false);
      this.renderAll();
    }
  }

  private async onBack(): Promise<void> {
    const target = Number(($("back-target") as HTMLSelectElement).value);
    try {
      this.setBusy(true);
      const view = await this.controller.back(target, (from, to) =>
        window.confirm(`Discard stages ${to} through ${from - 1}?`));
      if (view !== null) {
        this.maskLocked = view.cursor > 0;
        const pane = this.controller.committedPane();
        ($("pane-working") as HTMLImageElement).src = pane ? pngUrl(pane) : "";
        ($("download-link") as HTMLAnchorElement).hidden = true;
        this.setStatus(`rolled back to stage ${view.cursor}`);
      }
    } catch (err) {
      this.showError(err);
    } finally {
      this.setBusy(false);
      this.renderAll();
    }
  }

  private onClearMask(): void {
    if (this.mask && !this.maskLocked) {
      this.mask.clear();
      this.redrawMaskCanvas();
    }
  }

  private async onUploadMask(): Promise<void> {
    if (!this.mask || this.maskLocked) return;
    try {
      await this.controller.uploadMask(this.mask.toPng());
      const echoed = await this.controller.client.downloadMask(this.controller.sessionId);
      decodeGrayPng(echoed); // sanity: the server must hand back a readable mask
      this.setStatus(`mask uploaded, ${this.mask.paintedCount()} px marked`);
    } catch (err) {
      this.showError(err);
    }
  }

  private bindCanvas(): void {
    const canvas = $("mask-canvas") as HTMLCanvasElement;
    const toImage = (ev: MouseEvent): StrokePoint => {
      const rect = canvas.getBoundingClientRect();
      return screenToImage(ev.clientX - rect.left, ev.clientY - rect.top,
        { zoom: this.zoom, panX: 0, panY: 0 });
    };
    canvas.addEventListener("mousedown", (ev) => {
      if (!this.mask || this.maskLocked) return;
      this.drawing = true;
      const p = toImage(ev);
      this.mask.paintDot(p.x, p.y, this.brushRadius);
      this.strokeTail = p;
      this.redrawMaskCanvas();
    });
    canvas.addEventListener("mousemove", (ev) => {
      if (!this.drawing || !this.mask || this.maskLocked) return;
      const p = toImage(ev);
      if (this.strokeTail) {
        this.mask.paintStroke([this.strokeTail, p], this.brushRadius);
      }
      this.strokeTail = p;
      this.redrawMaskCanvas();
    });
    window.addEventListener("mouseup", () => {
      this.drawing = false;
      this.strokeTail = null;
    });
  }

  private sizeMaskCanvas(width: number, height: number): void {
    const canvas = $("mask-canvas") as HTMLCanvasElement;
    canvas.width = width;
    canvas.height = height;
    this.redrawMaskCanvas();
  }

  private redrawMaskCanvas(): void {
    const canvas = $("mask-canvas") as HTMLCanvasElement;
    const ctx = canvas.getContext("2d");
    if (!ctx || !this.mask) return;
    canvas.style.width = `${this.mask.width * this.zoom}px`;
    canvas.style.height = `${this.mask.height * this.zoom}px`;
    const frame = ctx.createImageData(this.mask.width, this.mask.height);
    for (let i = 0; i < this.mask.data.length; i++) {
      const on = this.mask.data[i] === 255;
      frame.data[i * 4] = 255;
      frame.data[i * 4 + 1] = 0;
      frame.data[i * 4 + 2] = 0;
      frame.data[i * 4 + 3] = on ? 140 : 0;
    }
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.putImageData(frame, 0, 0);
  }

  private renderStepper(): void {
    const host = $("stepper");
    host.innerHTML = "";
    for (const badge of this.controller ? this.controller.stepper.badges() : []) {
      const el = document.createElement("span");
      el.className = `step step-${badge.state}`;
      el.textContent = `${badge.index}. ${badge.name}`;
      host.appendChild(el);
    }
  }

  private renderForm(): void {
    const stage = this.controller.stepper.currentStage;
    const schema = stage ? stageFormSchema(stage) : null;
    $("stage-title").textContent = stage ?? "complete";
    ($("mask-tools") as HTMLElement).hidden = !(schema && schema.maskEnabled && !this.maskLocked);
    ($("upscale-row") as HTMLElement).hidden = stage !== "face";
    const backend = $("backend") as HTMLSelectElement;
    backend.innerHTML = "";
    if (stage) {
      for (const info of backendChoices(this.catalog, stage)) {
        const opt = document.createElement("option");
        opt.value = info.backend_id;
        opt.textContent = `${info.backend_id} (${info.kind})`;
        backend.appendChild(opt);
      }
    }
    const backTarget = $("back-target") as HTMLSelectElement;
    backTarget.innerHTML = "";
    for (const t of this.controller.stepper.backTargets()) {
      const opt = document.createElement("option");
      opt.value = String(t);
      opt.textContent = `stage ${t}`;
      backTarget.appendChild(opt);
    }
  }

  private setBusy(busy: boolean): void {
    for (const id of ["btn-preview", "btn-move", "btn-back", "btn-upload-mask"]) {
      ($(id) as HTMLButtonElement).disabled = busy;
    }
  }

  private renderAll(): void {
    this.renderStepper();
    this.renderForm();
    ($("btn-move") as HTMLButtonElement).disabled = !this.controller.stepper.canMove;
    ($("btn-back") as HTMLButtonElement).disabled = !this.controller.stepper.canBack;
  }

  private showError(err: unknown): void {
    const stage = this.controller.stepper.currentStage ?? "?";
    const message = err instanceof Error ? err.message : String(err);
    this.setStatus(`[${stage}] ${message} (adjust and retry)`);
  }
}

window.addEventListener("DOMContentLoaded", () => {
  void new App().start();
});
