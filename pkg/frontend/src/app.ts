// Controller: wires the review workflow to the API. Every action
// round-trips to the server and re-renders from the response, so the UI
// never shows a stale report (save -> fresh badges is one request).

import { ApiClient, ApiError, type Problem, type Variant } from "./api.js";
import {
  canAccept,
  canEdit,
  canReject,
  problemDisplayText,
  progressFraction,
} from "./state.js";
import {
  el,
  renderBadges,
  renderInterestChips,
  renderProblemList,
  renderVariantList,
  showBanner,
} from "./views.js";

export interface AppOptions {
  pollIntervalMs?: number;
}

export class App {
  problems: Problem[] = [];
  activeInterests: string[] = [];
  variants: Variant[] = [];
  selected: Variant | null = null;
  preEditText: string | null = null;
  jobRunning = false;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private options: AppOptions = {},
  ) {}

  // -- setup ----------------------------------------------------------------

  buildSkeleton(): void {
    this.root.replaceChildren();
    const header = el("header");
    header.append(el("h1", {}, "ctxforge review"));
    const exportButton = el("button", { id: "export" }, "Export CSV");
    exportButton.addEventListener("click", () => void this.exportCsv());
    header.append(exportButton);
    this.root.append(header);

    this.root.append(el("div", { id: "banners" }));

    const interests = el("section", { id: "interests" });
    interests.append(el("h2", {}, "Interests"));
    interests.append(el("ul", { id: "interest-chips" }));
    const form = el("div", { class: "interest-form" });
    form.append(el("input", { id: "interest-input", placeholder: "Add interest" }));
    const add = el("button", { id: "interest-add" }, "Add");
    add.addEventListener("click", () => void this.addInterest());
    form.append(add);
    form.append(el("span", { id: "interest-error", class: "field-error" }));
    interests.append(form);
    this.root.append(interests);

    const problems = el("section", { id: "problems" });
    problems.append(el("h2", {}, "Problems"));
    problems.append(el("ul", { id: "problem-list" }));
    const run = el("button", { id: "contextualize" }, "Contextualize");
    run.addEventListener("click", () => void this.contextualize());
    problems.append(run);
    const progress = el("progress", { id: "job-progress", max: "1", value: "0" });
    problems.append(progress);
    problems.append(el("span", { id: "job-status" }, "idle"));
    this.root.append(problems);

    const review = el("section", { id: "review" });
    review.append(el("h2", {}, "Review"));
    review.append(el("ul", { id: "variant-list" }));
    const pane = el("div", { class: "review-pane" });
    const originalCol = el("div", { class: "column" });
    originalCol.append(el("h3", {}, "Original"));
    originalCol.append(el("pre", { id: "original-text" }));
    const variantCol = el("div", { class: "column" });
    variantCol.append(el("h3", {}, "Variant"));
    variantCol.append(el("textarea", { id: "variant-editor", rows: "14" }));
    pane.append(originalCol, variantCol);
    review.append(pane);
    review.append(el("div", { id: "badges" }));
    const actions = el("div", { class: "actions" });
    for (const [id, label, handler] of [
      ["save-edit", "Save", () => void this.saveEdit()],
      ["revert-edit", "Revert", () => void this.revertEdit()],
      ["accept", "Accept", () => void this.decide("accept")],
      ["reject", "Reject", () => void this.decide("reject")],
      ["regenerate", "Regenerate", () => void this.regenerate()],
    ] as const) {
      const button = el("button", { id }, label);
      button.addEventListener("click", handler);
      actions.append(button);
    }
    review.append(actions);
    this.root.append(review);
  }

  async init(): Promise<void> {
    this.buildSkeleton();
    await this.refreshProblems();
    await this.refreshInterests();
    await this.refreshVariants();
    this.renderReview();
  }

  // -- helpers ----------------------------------------------------------------

  private $(id: string): HTMLElement {
    const node = this.root.querySelector(`#${id}`);
    if (!node) throw new Error(`missing element #${id}`);
    return node as HTMLElement;
  }

  private async guard<T>(work: () => Promise<T>): Promise<T | undefined> {
    try {
      return await work();
    } catch (error) {
      const message =
        error instanceof ApiError ? `${error.errorCode}: ${error.message}` : String(error);
      showBanner(this.$("banners"), message);
      return undefined;
    }
  }

  // -- data refresh ------------------------------------------------------------

  async refreshProblems(): Promise<void> {
    this.problems = (await this.guard(() => this.api.listProblems())) ?? this.problems;
    renderProblemList(this.$("problem-list"), this.problems);
  }

  async refreshInterests(): Promise<void> {
    const interests = await this.guard(() => this.api.listInterests());
    if (interests) {
      this.activeInterests = interests.map((i) => i.label);
      renderInterestChips(this.$("interest-chips"), interests, (label) =>
        this.deselectInterest(label),
      );
    }
  }

  async refreshVariants(): Promise<void> {
    const variants = await this.guard(() => this.api.listVariants());
    if (variants) {
      this.variants = variants;
      if (this.selected) {
        this.selected = variants.find((v) => v.id === this.selected!.id) ?? null;
      }
      renderVariantList(this.$("variant-list"), this.variants, this.selected?.id ?? null, (id) =>
        this.selectVariant(id),
      );
    }
  }

  // -- interests ---------------------------------------------------------------

  async addInterest(): Promise<void> {
    const input = this.$("interest-input") as HTMLInputElement;
    const errorField = this.$("interest-error");
    errorField.textContent = "";
    const label = input.value.trim();
    if (!label) return;
    try {
      await this.api.addInterest(label);
      input.value = "";
      await this.refreshInterests();
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // Duplicate label renders as a field error, not a banner.
        errorField.textContent = error.message;
      } else {
        showBanner(this.$("banners"), String(error));
      }
    }
  }

  // The API keeps interests; removing a chip only drops it from the next
  // batch selection.
  deselectInterest(label: string): void {
    this.activeInterests = this.activeInterests.filter((l) => l !== label);
    const chip = this.root.querySelector(`.chip[data-label="${label}"]`);
    chip?.remove();
  }

  // -- contextualization ---------------------------------------------------------

  selectedProblemIds(): string[] {
    return Array.from(this.root.querySelectorAll<HTMLInputElement>(".problem-check"))
      .filter((box) => box.checked)
      .map((box) => box.dataset.id!);
  }

  async contextualize(problemIds?: string[], interests?: string[]): Promise<void> {
    const ids = problemIds ?? this.selectedProblemIds();
    const labels = interests ?? this.activeInterests;
    if (!ids.length || !labels.length || this.jobRunning) return;
    const button = this.$("contextualize") as HTMLButtonElement;
    const status = this.$("job-status");
    const progress = this.$("job-progress") as HTMLProgressElement;
    const total = ids.length * labels.length;
    const baseline = this.variants.length;

    const started = await this.guard(() => this.api.contextualize(ids, labels));
    if (!started) return;
    this.jobRunning = true;
    button.disabled = true;
    status.textContent = "running";
    progress.value = 0;

    const interval = this.options.pollIntervalMs ?? 1000;
    try {
      for (;;) {
        const job = await this.api.jobStatus(started.job_id);
        await this.refreshVariants();
        progress.value = progressFraction(this.variants.length - baseline, total);
        if (job.phase === "done" || job.phase === "aborted") {
          status.textContent = job.phase;
          progress.value = 1;
          break;
        }
        await new Promise((resolve) => setTimeout(resolve, interval));
      }
    } catch (error) {
      status.textContent = "aborted";
      showBanner(this.$("banners"), String(error));
    } finally {
      this.jobRunning = false;
      button.disabled = false;
    }
    await this.refreshVariants();
    this.renderReview();
  }

  async regenerate(): Promise<void> {
    if (!this.selected) return;
    const { problem_id, interest_label } = this.selected;
    await this.contextualize([problem_id], [interest_label]);
    const fresh = this.variants.filter(
      (v) => v.problem_id === problem_id && v.interest_label === interest_label,
    );
    const latest = fresh[fresh.length - 1];
    if (latest) this.selectVariant(latest.id);
  }

  // -- review pane -----------------------------------------------------------

  selectVariant(id: string): void {
    this.selected = this.variants.find((v) => v.id === id) ?? null;
    this.preEditText = this.selected?.text ?? null;
    renderVariantList(this.$("variant-list"), this.variants, id, (vid) => this.selectVariant(vid));
    this.renderReview();
  }

  renderReview(): void {
    const original = this.$("original-text");
    const editor = this.$("variant-editor") as HTMLTextAreaElement;
    const variant = this.selected;
    if (!variant) {
      original.textContent = "";
      editor.value = "";
      renderBadges(this.$("badges"), []);
    } else {
      const problem = this.problems.find((p) => p.id === variant.problem_id);
      original.textContent = problem ? problemDisplayText(problem) : "";
      editor.value = variant.text;
      renderBadges(this.$("badges"), variant.report?.checks ?? []);
    }
    (this.$("save-edit") as HTMLButtonElement).disabled = !canEdit(variant);
    (this.$("revert-edit") as HTMLButtonElement).disabled =
      !canEdit(variant) || this.preEditText === null || this.preEditText === editor.value;
    (this.$("accept") as HTMLButtonElement).disabled = !canAccept(variant);
    (this.$("reject") as HTMLButtonElement).disabled = !canReject(variant);
    (this.$("regenerate") as HTMLButtonElement).disabled = variant === null || this.jobRunning;
  }

  private applyVariantUpdate(updated: Variant): void {
    this.variants = this.variants.map((v) => (v.id === updated.id ? updated : v));
    this.selected = updated;
    renderVariantList(this.$("variant-list"), this.variants, updated.id, (id) =>
      this.selectVariant(id),
    );
    this.renderReview();
  }

  async saveEdit(): Promise<void> {
    if (!this.selected) return;
    const editor = this.$("variant-editor") as HTMLTextAreaElement;
    const updated = await this.guard(() => this.api.editVariant(this.selected!.id, editor.value));
    if (updated) this.applyVariantUpdate(updated);
  }

  async revertEdit(): Promise<void> {
    if (!this.selected || this.preEditText === null) return;
    const editor = this.$("variant-editor") as HTMLTextAreaElement;
    editor.value = this.preEditText;
    const updated = await this.guard(() => this.api.editVariant(this.selected!.id, this.preEditText!));
    if (updated) this.applyVariantUpdate(updated);
  }

  async decide(decision: "accept" | "reject"): Promise<void> {
    if (!this.selected) return;
    const updated = await this.guard(() => this.api.decideVariant(this.selected!.id, decision));
    if (updated) this.applyVariantUpdate(updated);
  }

  // -- export -----------------------------------------------------------------

  async exportCsv(): Promise<void> {
    const csv = await this.guard(() => this.api.exportCsv());
    if (csv === undefined) return;
    if (typeof URL.createObjectURL === "function") {
      const blob = new Blob([csv], { type: "text/csv" });
      const anchor = el("a", {
        href: URL.createObjectURL(blob),
        download: "ctxforge-export.csv",
      });
      anchor.click();
      URL.revokeObjectURL(anchor.href);
    }
  }
}

export function createApp(root: HTMLElement, api: ApiClient, options: AppOptions = {}): App {
  return new App(root, api, options);
}

export async function mount(root: HTMLElement, options: AppOptions = {}): Promise<App> {
  const app = createApp(root, new ApiClient(""), options);
  await app.init();
  return app;
}
