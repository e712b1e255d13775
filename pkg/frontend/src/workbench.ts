/** Evaluation workbench state: filtering, record navigation, five-criteria
 * verdict editing, and saving with server-confirmed state.
 *
 * The view layer stays thin; everything here is plain state so the bulk
 * annotation flow (j/k stepping, 1-5 criterion focus) is unit-testable.
 */

import { AnnotatePatch, ApiError, EvalRecord, Verdict } from "./api.js";

/** The slice of the API the workbench needs. */
export interface WorkbenchApi {
  records(filter?: string): Promise<EvalRecord[]>;
  annotate(recordId: string, patch: AnnotatePatch): Promise<EvalRecord>;
}

export const CRITERIA = [
  "valid_question",
  "correct_class",
  "article_exists",
  "search_success",
  "good_answer",
] as const;

export type CriterionName = (typeof CRITERIA)[number];

export const CRITERION_LABELS: Record<CriterionName, string> = {
  valid_question: "Valid question",
  correct_class: "Correct class",
  article_exists: "Article exists",
  search_success: "Search success",
  good_answer: "Good answer",
};

/** Client-side mirror of the server workflow rule; returns the violation
 * message or null. The server remains authoritative. */
export function workflowViolation(verdicts: Record<string, Verdict>): string | null {
  if (verdicts.good_answer === "yes") {
    if (verdicts.article_exists !== "yes" || verdicts.search_success !== "yes") {
      return "good_answer=yes requires article_exists=yes and search_success=yes";
    }
  }
  return null;
}

export type KeyAction =
  | { kind: "next" }
  | { kind: "previous" }
  | { kind: "focus"; criterion: CriterionName }
  | null;

/** Keyboard map: j/k step records, digits 1-5 focus a criterion. */
export function keyAction(key: string): KeyAction {
  if (key === "j" || key === "ArrowDown") return { kind: "next" };
  if (key === "k" || key === "ArrowUp") return { kind: "previous" };
  const digit = Number.parseInt(key, 10);
  if (digit >= 1 && digit <= CRITERIA.length) {
    return { kind: "focus", criterion: CRITERIA[digit - 1] };
  }
  return null;
}

export class Workbench {
  records: EvalRecord[] = [];
  index = 0;
  filter = "";
  draft: Record<string, Verdict> = {};
  tagsDraft: string[] = [];
  error: string | null = null;
  conflict = false;
  saving = false;
  onChange: () => void = () => {};

  constructor(private api: WorkbenchApi, public annotator = "") {}

  get current(): EvalRecord | null {
    return this.records[this.index] ?? null;
  }

  get dirty(): boolean {
    const record = this.current;
    if (!record) return false;
    return CRITERIA.some((name) => (this.draft[name] ?? "unset") !== (record.verdicts[name] ?? "unset"));
  }

  private resetDraft(): void {
    const record = this.current;
    this.draft = {};
    this.tagsDraft = record ? [...record.tags] : [];
    for (const name of CRITERIA) {
      this.draft[name] = record?.verdicts[name] ?? "unset";
    }
    this.error = null;
    this.conflict = false;
  }

  async load(filter = this.filter): Promise<void> {
    this.filter = filter;
    let loadError: string | null = null;
    try {
      this.records = await this.api.records(filter);
    } catch (err) {
      this.records = [];
      loadError = err instanceof ApiError ? String(err.detail) : "failed to load records";
    }
    this.index = 0;
    this.resetDraft();
    this.error = loadError;
    this.onChange();
  }

  goTo(index: number): void {
    if (this.records.length === 0) return;
    this.index = Math.min(Math.max(index, 0), this.records.length - 1);
    this.resetDraft();
    this.onChange();
  }

  next(): void {
    this.goTo(this.index + 1);
  }

  previous(): void {
    this.goTo(this.index - 1);
  }

  setVerdict(name: CriterionName, value: Verdict): void {
    this.draft[name] = value;
    // optimistic client-side check so violations surface before a round-trip
    this.error = workflowViolation(this.draft);
    this.onChange();
  }

  setTags(tags: string[]): void {
    this.tagsDraft = tags;
    this.onChange();
  }

  /** Save the draft; on success local state is the server-confirmed record.
   * A concurrent writer winning in between surfaces as a conflict prompt. */
  async save(): Promise<boolean> {
    const record = this.current;
    if (!record || this.saving) return false;
    const violation = workflowViolation(this.draft);
    if (violation) {
      this.error = violation;
      this.onChange();
      return false;
    }
    const patch: AnnotatePatch = {
      verdicts: { ...this.draft },
      tags: this.tagsDraft,
      annotator: this.annotator,
    };
    this.saving = true;
    this.onChange();
    try {
      const saved = await this.api.annotate(record.record_id, patch);
      this.records[this.index] = saved;
      const mismatch = CRITERIA.some((name) => saved.verdicts[name] !== this.draft[name]);
      this.resetDraft();
      if (mismatch) {
        this.conflict = true;
        this.error = "record changed on the server; reload to continue";
      }
      return !mismatch;
    } catch (err) {
      // server rejection (e.g. workflow rule) surfaces inline; draft is kept
      this.error = err instanceof ApiError ? String(err.detail) : "save failed";
      return false;
    } finally {
      this.saving = false;
      this.onChange();
    }
  }

  handleKey(key: string): KeyAction {
    const action = keyAction(key);
    if (action?.kind === "next") this.next();
    if (action?.kind === "previous") this.previous();
    return action;
  }
}
