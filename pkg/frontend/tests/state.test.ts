import { describe, expect, it } from "vitest";

import type { Report, Variant } from "../src/api.js";
import {
  badgeClass,
  canAccept,
  canEdit,
  canReject,
  problemDisplayText,
  progressFraction,
} from "../src/state.js";
import { PAPER_PROBLEMS } from "./mockApi.js";

function variant(state: string, overall: "pass" | "warn" | "fail" | null = "pass"): Variant {
  const report: Report | null = overall
    ? { checks: [], overall }
    : null;
  return {
    id: "v",
    problem_id: "cd-album",
    interest_label: "NBA",
    state,
    overall,
    text: "text",
    attempt: 1,
    report,
  };
}

describe("acceptance gating", () => {
  it("mirrors the server state machine", () => {
    expect(canAccept(variant("validated"))).toBe(true);
    expect(canAccept(variant("needs_review", "warn"))).toBe(true);
    expect(canAccept(variant("needs_review", "fail"))).toBe(false);
    expect(canAccept(variant("edited"))).toBe(false);
    expect(canAccept(variant("accepted"))).toBe(false);
    expect(canAccept(variant("generated", null))).toBe(false);
    expect(canAccept(null)).toBe(false);
  });

  it("reject and edit follow the lifecycle", () => {
    expect(canReject(variant("validated"))).toBe(true);
    expect(canReject(variant("rejected"))).toBe(false);
    expect(canEdit(variant("needs_review", "fail"))).toBe(true);
    expect(canEdit(variant("edited"))).toBe(true);
    expect(canEdit(variant("failed", null))).toBe(false);
  });
});

describe("badges", () => {
  it("maps outcomes to colors", () => {
    expect(badgeClass("pass")).toBe("badge badge-pass");
    expect(badgeClass("warn")).toBe("badge badge-warn");
    expect(badgeClass("fail")).toBe("badge badge-fail");
    expect(badgeClass("skipped")).toBe("badge badge-skip");
  });
});

describe("problem display", () => {
  it("renders body, note, formula and numbered questions", () => {
    const cdAlbum = PAPER_PROBLEMS.find((p) => p.id === "cd-album")!;
    const text = problemDisplayText(cdAlbum);
    expect(text).toContain("Danny and the Algebraics");
    expect(text).toContain("Let $C$ be the number of CDs");
    expect(text).toContain("The amount of money they will have left = 1000 - 2.50$(C+15)$");
    expect(text).toContain("1. How much money is left if they make 85 additional CDs?");
    expect(text).toContain("4. How much money is left if they make 385 additional CDs?");
  });

  it("keeps a bare equation bare", () => {
    const eq = PAPER_PROBLEMS.find((p) => p.id === "eq-1")!;
    expect(problemDisplayText(eq)).toBe("2x + 3 = 15");
  });
});

describe("progress", () => {
  it("clamps to [0, 1]", () => {
    expect(progressFraction(0, 4)).toBe(0);
    expect(progressFraction(2, 4)).toBe(0.5);
    expect(progressFraction(9, 4)).toBe(1);
    expect(progressFraction(1, 0)).toBe(0);
  });
});
