// DOM wiring. All simulation state is server-authoritative: every interaction
// issues an API call and re-renders from the response, so refreshing the page
// and refetching the session reproduces the identical view.

import { ApiError, Client } from "./api.js";
import { metersToPixel, placeStartPose, type PixelPoint } from "./geometry.js";
import { composeInstruction, TEMPLATES, type InstructionForm } from "./instruction.js";
import { keyToCommand } from "./teleop.js";
import type { ActionName, FloorplanDoc, SessionView, StartPose } from "./types.js";

interface Elements {
  planSelect: HTMLSelectElement;
  planUpload: HTMLInputElement;
  planCanvas: HTMLCanvasElement;
  poseReadout: HTMLElement;
  templateSelect: HTMLSelectElement;
  startRegion: HTMLSelectElement;
  goalRegion: HTMLSelectElement;
  stopInput: HTMLInputElement;
  preview: HTMLElement;
  startButton: HTMLButtonElement;
  saveButton: HTMLButtonElement;
  frame: HTMLImageElement;
  status: HTMLElement;
  error: HTMLElement;
}

const grab = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
};

export class App {
  private client: Client;
  private els: Elements;
  private plan: FloorplanDoc | null = null;
  private planId = "";
  private startPose: StartPose | null = null;
  private dragStart: PixelPoint | null = null;
  private session: SessionView | null = null;
  private planImage: HTMLImageElement | null = null;

  constructor(client: Client) {
    this.client = client;
    this.els = {
      planSelect: grab("plan-select") as HTMLSelectElement,
      planUpload: grab("plan-upload") as HTMLInputElement,
      planCanvas: grab("plan-canvas") as HTMLCanvasElement,
      poseReadout: grab("pose-readout"),
      templateSelect: grab("template-select") as HTMLSelectElement,
      startRegion: grab("start-region") as HTMLSelectElement,
      goalRegion: grab("goal-region") as HTMLSelectElement,
      stopInput: grab("stop-input") as HTMLInputElement,
      preview: grab("instruction-preview"),
      startButton: grab("start-session") as HTMLButtonElement,
      saveButton: grab("save-episode") as HTMLButtonElement,
      frame: grab("frame") as HTMLImageElement,
      status: grab("session-status"),
      error: grab("error-banner"),
    };
    this.bind();
  }

  async init(): Promise<void> {
    TEMPLATES.forEach((_, i) => {
      const opt = document.createElement("option");
      opt.value = String(i);
      opt.textContent = `template ${i}`;
      this.els.templateSelect.appendChild(opt);
    });
    await this.refreshPlanList();
    const sid = window.location.hash.replace("#", "");
    if (sid) {
      try {
        await this.adoptSession(await this.client.getSession(sid));
      } catch {
        window.location.hash = "";
      }
    }
  }

  private bind(): void {
    this.els.planSelect.addEventListener("change", () => {
      void this.loadPlan(this.els.planSelect.value);
    });
    this.els.planUpload.addEventListener("change", () => {
      void this.uploadPlan();
    });
    this.els.planCanvas.addEventListener("mousedown", (e) => {
      this.dragStart = this.canvasPoint(e);
    });
    this.els.planCanvas.addEventListener("mouseup", (e) => {
      if (!this.dragStart || !this.plan) return;
      const pose = placeStartPose(this.dragStart, this.canvasPoint(e), this.plan.render);
      this.dragStart = null;
      this.startPose = pose;
      this.els.poseReadout.textContent =
        `start pose: (${pose.x.toFixed(2)}, ${pose.y.toFixed(2)}), ` +
        `heading ${((pose.theta * 180) / Math.PI).toFixed(0)} deg`;
      this.redrawPlan();
    });
    for (const el of [this.els.templateSelect, this.els.startRegion,
                      this.els.goalRegion, this.els.stopInput]) {
      el.addEventListener("input", () => this.updatePreview());
    }
    this.els.startButton.addEventListener("click", () => {
      void this.startSession();
    });
    this.els.saveButton.addEventListener("click", () => {
      void this.saveEpisode();
    });
    document.addEventListener("keydown", (e) => {
      const cmd = keyToCommand(e.key);
      if (cmd && this.session && this.session.status === "running") {
        e.preventDefault();
        void this.step(cmd.action, cmd.magnitude);
      }
    });
  }

  private canvasPoint(e: MouseEvent): PixelPoint {
    const rect = this.els.planCanvas.getBoundingClientRect();
    return { px: e.clientX - rect.left, py: e.clientY - rect.top };
  }

  private async refreshPlanList(): Promise<void> {
    const { floorplans } = await this.client.listFloorplans();
    this.els.planSelect.innerHTML = "<option value=''>choose a plan</option>";
    for (const fp of floorplans) {
      const opt = document.createElement("option");
      opt.value = fp.floorplan_id;
      opt.textContent = `${fp.scene_id} / floor ${fp.floor_id} (${fp.regions.length} regions)`;
      this.els.planSelect.appendChild(opt);
    }
  }

  private async uploadPlan(): Promise<void> {
    const file = this.els.planUpload.files?.[0];
    if (!file) return;
    try {
      const { floorplan_id } = await this.client.uploadFloorplan(await file.text());
      await this.refreshPlanList();
      this.els.planSelect.value = floorplan_id;
      await this.loadPlan(floorplan_id);
    } catch (err) {
      this.showError(err);
    }
  }

  private async loadPlan(id: string): Promise<void> {
    if (!id) return;
    this.planId = id;
    this.plan = await this.client.getFloorplan(id);
    this.startPose = null;
    this.els.poseReadout.textContent = "click the plan to place a start pose; drag to set the heading";
    for (const sel of [this.els.startRegion, this.els.goalRegion]) {
      sel.innerHTML = "";
      for (const r of this.plan.regions) {
        const opt = document.createElement("option");
        opt.value = String(r.id);
        opt.textContent = `${r.type} ${r.id}`;
        sel.appendChild(opt);
      }
    }
    this.updatePreview();
    await new Promise<void>((resolve) => {
      const img = new Image();
      img.onload = () => {
        this.planImage = img;
        this.els.planCanvas.width = img.width;
        this.els.planCanvas.height = img.height;
        this.redrawPlan();
        resolve();
      };
      img.src = this.client.rasterUrl(id);
    });
  }

  private redrawPlan(): void {
    if (!this.planImage) return;
    const ctx = this.els.planCanvas.getContext("2d");
    if (!ctx) return;
    ctx.drawImage(this.planImage, 0, 0);
    if (this.startPose && this.plan) {
      const { px, py } = metersToPixel(this.startPose.x, this.startPose.y, this.plan.render);
      ctx.fillStyle = "#15c715";
      ctx.fillRect(px - 5, py - 5, 10, 10);
      ctx.strokeStyle = "#15c715";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(px, py);
      ctx.lineTo(px + 16 * Math.sin(this.startPose.theta),
                 py - 16 * Math.cos(this.startPose.theta));
      ctx.stroke();
    }
  }

  private instructionForm(): InstructionForm {
    const startRegion = this.plan?.regions.find(
      (r) => r.id === Number(this.els.startRegion.value));
    const goalRegion = this.plan?.regions.find(
      (r) => r.id === Number(this.els.goalRegion.value));
    return {
      templateId: Number(this.els.templateSelect.value || 0),
      startType: startRegion?.type ?? "",
      startId: startRegion?.id ?? 0,
      goalType: goalRegion?.type ?? "",
      goalId: goalRegion?.id ?? 0,
      stopCondition: this.els.stopInput.value.trim(),
    };
  }

  private updatePreview(): void {
    if (!this.plan) return;
    try {
      this.els.preview.textContent = composeInstruction(this.instructionForm());
    } catch (err) {
      this.els.preview.textContent = String(err);
    }
  }

  private async startSession(): Promise<void> {
    if (!this.planId || !this.plan) {
      this.showError(new Error("load a floor plan first"));
      return;
    }
    if (!this.startPose) {
      this.showError(new Error("place a start pose on the plan first"));
      return;
    }
    try {
      const text = composeInstruction(this.instructionForm());
      const view = await this.client.createSession(this.planId, this.startPose, text);
      await this.adoptSession(view);
    } catch (err) {
      this.showError(err);
    }
  }

  private async adoptSession(view: SessionView): Promise<void> {
    this.session = view;
    window.location.hash = view.session_id;
    this.clearError();
    this.renderSession();
  }

  private async step(action: ActionName, magnitude: number | null): Promise<void> {
    if (!this.session) return;
    try {
      const view = await this.client.stepSession(this.session.session_id, action, magnitude);
      this.session = view;
      this.renderSession();
    } catch (err) {
      if (err instanceof ApiError && err.code === "session_stopped") {
        this.els.status.textContent = "session already stopped";
      } else {
        this.showError(err);
      }
    }
  }

  private renderSession(): void {
    const s = this.session;
    if (!s) return;
    this.els.frame.src = this.client.frameUrl(s);
    const fmt = (p: [number, number, number]) =>
      `(${p[0].toFixed(2)}, ${p[1].toFixed(2)}, ${((p[2] * 180) / Math.PI).toFixed(0)}°)`;
    this.els.status.innerHTML =
      `<b>${s.status}</b> · step ${s.step} · NE ${s.ne.toFixed(2)} m<br>` +
      `true ${fmt(s.true_pose)} · believed ${fmt(s.believed_pose)}<br>` +
      `“${s.instruction.rendered}”`;
    this.els.saveButton.disabled = s.status === "running";
    if (s.status !== "running") {
      this.els.status.innerHTML += `<br><b>episode ${s.status}</b>: ` +
        (s.status === "success" ? "you can save this demonstration" : "not saveable");
    }
  }

  private async saveEpisode(): Promise<void> {
    if (!this.session) return;
    try {
      const { episode_id } = await this.client.saveSession(this.session.session_id);
      this.els.status.innerHTML += `<br>saved as episode <code>${episode_id}</code>`;
    } catch (err) {
      this.showError(err);
    }
  }

  private showError(err: unknown): void {
    const msg = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    this.els.error.textContent = msg;
    this.els.error.style.display = "block";
  }

  private clearError(): void {
    this.els.error.textContent = "";
    this.els.error.style.display = "none";
  }
}
