// Pure view-state helpers. The server is the source of truth; these only
// mirror its rules so no reachable click produces a 409 in normal flow.

import type { Problem, Variant } from "./api.js";

export const REVIEWABLE_STATES = ["validated", "needs_review"];

export function canAccept(variant: Variant | null): boolean {
  if (!variant) return false;
  if (!REVIEWABLE_STATES.includes(variant.state)) return false;
  return variant.report !== null && variant.report.overall !== "fail";
}

export function canReject(variant: Variant | null): boolean {
  return variant !== null && REVIEWABLE_STATES.includes(variant.state);
}

export function canEdit(variant: Variant | null): boolean {
  return variant !== null && ["validated", "needs_review", "edited"].includes(variant.state);
}

export function isTerminal(variant: Variant | null): boolean {
  return variant !== null && ["accepted", "rejected", "failed"].includes(variant.state);
}

export function badgeClass(outcome: string): string {
  switch (outcome) {
    case "pass":
      return "badge badge-pass";
    case "warn":
      return "badge badge-warn";
    case "fail":
      return "badge badge-fail";
    default:
      return "badge badge-skip";
  }
}

// Mirrors the server-side rendering of a problem for the side-by-side view.
export function problemDisplayText(problem: Problem): string {
  const parts: string[] = [problem.body];
  if (problem.variable_note) parts.push(problem.variable_note);
  if (problem.formula) parts.push(problem.formula);
  problem.sub_questions.forEach((q, i) => parts.push(`${i + 1}. ${q}`));
  return parts.join("\n\n");
}

export function progressFraction(done: number, total: number): number {
  if (total <= 0) return 0;
  return Math.min(1, Math.max(0, done / total));
}
