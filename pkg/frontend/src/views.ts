// DOM construction. Every render replaces the children of a stable
// container; ids/classes double as hooks for the scripted tests.

import type { CheckResult, Interest, Problem, Variant } from "./api.js";
import { badgeClass } from "./state.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderInterestChips(
  container: HTMLElement,
  interests: Interest[],
  onRemove: (label: string) => void,
): void {
  container.replaceChildren();
  for (const interest of interests) {
    const chip = el("li", { class: "chip", "data-label": interest.label });
    chip.append(el("span", {}, interest.label));
    const remove = el("button", { class: "chip-remove", title: "remove" }, "×");
    remove.addEventListener("click", () => onRemove(interest.label));
    chip.append(remove);
    container.append(chip);
  }
}

export function renderProblemList(container: HTMLElement, problems: Problem[]): void {
  container.replaceChildren();
  for (const problem of problems) {
    const row = el("li", { class: "problem-row" });
    const label = el("label");
    const checkbox = el("input", {
      type: "checkbox",
      class: "problem-check",
      "data-id": problem.id,
      checked: "checked",
    }) as HTMLInputElement;
    checkbox.checked = true;
    label.append(checkbox);
    label.append(el("span", {}, problem.title ?? problem.id));
    row.append(label);
    container.append(row);
  }
}

export function renderVariantList(
  container: HTMLElement,
  variants: Variant[],
  selectedId: string | null,
  onSelect: (id: string) => void,
): void {
  container.replaceChildren();
  for (const variant of variants) {
    const row = el("li", {
      class: "variant-row" + (variant.id === selectedId ? " selected" : ""),
      "data-id": variant.id,
    });
    row.append(el("span", { class: "variant-key" }, `${variant.problem_id} × ${variant.interest_label}`));
    row.append(el("span", { class: `state-chip state-${variant.state}` }, variant.state));
    row.addEventListener("click", () => onSelect(variant.id));
    container.append(row);
  }
}

export function renderBadges(container: HTMLElement, checks: CheckResult[]): void {
  container.replaceChildren();
  for (const check of checks) {
    const badge = el(
      "span",
      { class: badgeClass(check.outcome), "data-check": check.check_id, title: check.details },
      `${check.check_id}: ${check.outcome}`,
    );
    container.append(badge);
  }
}

export function showBanner(container: HTMLElement, message: string): void {
  const banner = el("div", { class: "banner", role: "alert" });
  banner.append(el("span", {}, message));
  const dismiss = el("button", { class: "banner-dismiss" }, "dismiss");
  dismiss.addEventListener("click", () => banner.remove());
  banner.append(dismiss);
  container.append(banner);
}
