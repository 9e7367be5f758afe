// Browser bootstrap: tabs, queue, detail pane, priming form, dashboard.
// Pure DOM wiring; everything it shows comes from render.ts and state.ts.

import { ApiClient, ApiError } from "./api.js";
import { ReviewApp } from "./state.js";
import {
  renderDashboard,
  renderDetail,
  renderPrimingForm,
  renderQueue,
} from "./render.js";
import type { LabelValue, RecordStatus, SectionEdit } from "./types.js";

declare global {
  interface Window {
    API_BASE?: string;
  }
}

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? window.API_BASE ?? window.location.origin;
}

const TABS: RecordStatus[] = ["pending", "canary", "accepted", "rejected"];

class Ui {
  private readonly app: ReviewApp;
  private banner: HTMLElement;
  private tabs: HTMLElement;
  private queue: HTMLElement;
  private detail: HTMLElement;
  private dashboard: HTMLElement;
  private priming: HTMLElement;

  constructor(private readonly root: HTMLElement) {
    this.app = new ReviewApp(new ApiClient(apiBase()));
    this.root.innerHTML = `
      <div id="banner" hidden></div>
      <nav id="tabs"></nav>
      <main class="split">
        <div id="queue"></div>
        <div id="detail"></div>
      </main>
      <aside>
        <h2>Generate more</h2>
        <div id="priming"></div>
        <h2>Programmatic analysis</h2>
        <div id="dashboard"></div>
      </aside>`;
    this.banner = this.root.querySelector("#banner")!;
    this.tabs = this.root.querySelector("#tabs")!;
    this.queue = this.root.querySelector("#queue")!;
    this.detail = this.root.querySelector("#detail")!;
    this.dashboard = this.root.querySelector("#dashboard")!;
    this.priming = this.root.querySelector("#priming")!;
  }

  async start(): Promise<void> {
    this.renderTabs();
    this.priming.innerHTML = renderPrimingForm(["speeding", "currency", "donuts"]);
    this.wirePrimingForm();
    await this.guard(async () => {
      await this.app.refresh();
      this.renderQueuePane();
      await this.app.loadDashboard();
      this.dashboard.innerHTML = renderDashboard(this.app.summary!);
    });
  }

  private async guard(action: () => Promise<void>): Promise<void> {
    try {
      await action();
      this.banner.hidden = true;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.banner.textContent = "Already decided elsewhere; refreshing.";
        this.banner.hidden = false;
        await this.app.refresh();
        this.renderQueuePane();
        this.renderDetailPane();
        return;
      }
      this.banner.textContent = `Connection lost or request failed: ${String(error)} (retry below)`;
      this.banner.hidden = false;
    }
  }

  private renderTabs(): void {
    this.tabs.innerHTML = TABS.map(
      (status) =>
        `<button class="tab${status === this.app.statusFilter ? " active" : ""}" data-status="${status}">${status}</button>`,
    ).join("");
    for (const button of this.tabs.querySelectorAll<HTMLButtonElement>(".tab")) {
      button.onclick = () =>
        this.guard(async () => {
          await this.app.setFilter(button.dataset.status as RecordStatus);
          this.renderTabs();
          this.renderQueuePane();
        });
    }
  }

  private renderQueuePane(): void {
    this.queue.innerHTML = renderQueue(this.app.records);
    for (const row of this.queue.querySelectorAll<HTMLTableRowElement>(".queue-row")) {
      row.onclick = () =>
        this.guard(async () => {
          await this.app.select(row.dataset.id!);
          this.renderDetailPane();
        });
    }
  }

  private renderDetailPane(): void {
    if (!this.app.selected) {
      this.detail.innerHTML = "";
      return;
    }
    this.detail.innerHTML = renderDetail(this.app.selected);
    const reviewerInput = this.detail.querySelector<HTMLInputElement>(".reviewer")!;

    for (const row of this.detail.querySelectorAll<HTMLElement>(".label-row")) {
      const dimension = row.dataset.dimension!;
      const notes = row.querySelector<HTMLInputElement>(".notes")!;
      for (const button of row.querySelectorAll<HTMLButtonElement>(".label-btn")) {
        button.onclick = () =>
          this.guard(async () => {
            await this.app.addLabel(
              dimension,
              button.dataset.value as LabelValue,
              reviewerInput.value || "reviewer",
              notes.value || undefined,
            );
            this.renderDetailPane();
          });
      }
    }

    for (const block of this.detail.querySelectorAll<HTMLElement>(".consensus")) {
      const dimension = block.dataset.dimension!;
      const second = block.querySelector<HTMLInputElement>(".second-reviewer")!;
      for (const button of block.querySelectorAll<HTMLButtonElement>(".consensus-btn")) {
        button.onclick = () =>
          this.guard(async () => {
            await this.app.resolveConsensus(dimension, button.dataset.value as "yes" | "no", [
              reviewerInput.value || "reviewer",
              second.value || "second-reviewer",
            ]);
            this.renderDetailPane();
          });
      }
    }

    const collectEdits = (): SectionEdit[] => {
      const edits: SectionEdit[] = [];
      for (const editor of this.detail.querySelectorAll<HTMLTextAreaElement>(".editor")) {
        const section = editor.dataset.section as SectionEdit["section"];
        const original = this.app.selected!.exercise[section] ?? "";
        if (editor.value !== original) {
          edits.push({ section, text: editor.value });
        }
      }
      return edits;
    };

    this.detail.querySelector<HTMLButtonElement>(".accept")!.onclick = () =>
      this.guard(async () => {
        await this.app.decide("accept", reviewerInput.value || "reviewer", collectEdits());
        this.renderQueuePane();
        this.renderDetailPane();
      });
    this.detail.querySelector<HTMLButtonElement>(".reject")!.onclick = () =>
      this.guard(async () => {
        await this.app.decide("reject", reviewerInput.value || "reviewer");
        this.renderQueuePane();
        this.renderDetailPane();
      });
  }

  private wirePrimingForm(): void {
    const form = this.priming.querySelector<HTMLFormElement>(".priming-form")!;
    form.onsubmit = (event) => {
      event.preventDefault();
      const data = new FormData(form);
      void this.guard(async () => {
        const concepts = String(data.get("concept_set") ?? "")
          .split(",")
          .map((token) => token.trim())
          .filter(Boolean);
        await this.app.api.enqueueJobs({
          priming_id: String(data.get("priming_id")),
          theme: String(data.get("theme") ?? "") || null,
          concept_set: concepts,
          temperature: Number(data.get("temperature") ?? 0),
          count: Number(data.get("count") ?? 1),
        });
        this.banner.textContent = "Generation jobs queued.";
        this.banner.hidden = false;
      });
    };
  }
}

const rootElement = document.getElementById("app");
if (rootElement) {
  void new Ui(rootElement).start();
}
