import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import { Workbench, keyAction, workflowViolation } from "../src/workbench.js";
import { FakeEvalApi, makeRecord } from "./fakes.js";

function twoRecordApi(): FakeEvalApi {
  return new FakeEvalApi([makeRecord({ record_id: "r1" }), makeRecord({ record_id: "r2" })]);
}

describe("workflowViolation", () => {
  it("allows good_answer only after article and search pass", () => {
    expect(
      workflowViolation({ good_answer: "yes", article_exists: "yes", search_success: "yes" }),
    ).toBeNull();
    expect(
      workflowViolation({ good_answer: "yes", article_exists: "yes", search_success: "no" }),
    ).toContain("good_answer");
    expect(workflowViolation({ good_answer: "no", article_exists: "unset", search_success: "unset" })).toBeNull();
  });
});

describe("keyAction", () => {
  it("maps j/k and arrows to record steps", () => {
    expect(keyAction("j")).toEqual({ kind: "next" });
    expect(keyAction("ArrowDown")).toEqual({ kind: "next" });
    expect(keyAction("k")).toEqual({ kind: "previous" });
    expect(keyAction("ArrowUp")).toEqual({ kind: "previous" });
  });

  it("maps digits 1-5 to the five criteria", () => {
    expect(keyAction("1")).toEqual({ kind: "focus", criterion: "valid_question" });
    expect(keyAction("5")).toEqual({ kind: "focus", criterion: "good_answer" });
    expect(keyAction("6")).toBeNull();
    expect(keyAction("x")).toBeNull();
  });
});

describe("Workbench", () => {
  it("loads records and steps with j/k clamped at the ends", async () => {
    const workbench = new Workbench(twoRecordApi());
    await workbench.load();
    expect(workbench.records).toHaveLength(2);
    expect(workbench.current?.record_id).toBe("r1");
    workbench.handleKey("j");
    expect(workbench.current?.record_id).toBe("r2");
    workbench.handleKey("j");
    expect(workbench.current?.record_id).toBe("r2");
    workbench.handleKey("k");
    expect(workbench.current?.record_id).toBe("r1");
    workbench.handleKey("k");
    expect(workbench.current?.record_id).toBe("r1");
  });

  it("save round-trip: server state equals the submitted patch", async () => {
    const api = twoRecordApi();
    const workbench = new Workbench(api, "reviewer");
    await workbench.load();
    workbench.setVerdict("valid_question", "yes");
    workbench.setVerdict("article_exists", "no");
    expect(workbench.dirty).toBe(true);

    const saved = await workbench.save();
    expect(saved).toBe(true);
    expect(workbench.error).toBeNull();
    expect(workbench.dirty).toBe(false);

    // reload shows the saved verdicts
    const fresh = new Workbench(api);
    await fresh.load();
    expect(fresh.current?.verdicts.valid_question).toBe("yes");
    expect(fresh.current?.verdicts.article_exists).toBe("no");
    expect(api.annotateCalls[0].patch.annotator).toBe("reviewer");
  });

  it("surfaces the client-side workflow violation before any request", async () => {
    const api = twoRecordApi();
    const workbench = new Workbench(api);
    await workbench.load();
    workbench.setVerdict("good_answer", "yes");
    expect(workbench.error).toContain("good_answer");
    const saved = await workbench.save();
    expect(saved).toBe(false);
    expect(api.annotateCalls).toHaveLength(0);
    // draft survives so the evaluator can fix it
    expect(workbench.draft.good_answer).toBe("yes");
  });

  it("surfaces a server rejection inline and keeps the draft", async () => {
    // server enforces a rule the client-side mirror does not know about
    const api = twoRecordApi();
    const strict = {
      records: api.records.bind(api),
      annotate: async () => {
        throw new ApiError(422, "annotation window closed for this record");
      },
    };
    const workbench = new Workbench(strict);
    await workbench.load();
    workbench.setVerdict("valid_question", "no");
    const saved = await workbench.save();
    expect(saved).toBe(false);
    expect(workbench.error).toContain("annotation window closed");
    expect(workbench.draft.valid_question).toBe("no");
    expect(workbench.dirty).toBe(true);
  });

  it("filter load matches the server query surface", async () => {
    const api = twoRecordApi();
    await api.annotate("r2", { verdicts: { article_exists: "yes", search_success: "no" } });
    const workbench = new Workbench(api);
    await workbench.load("article_exists=yes AND search_success=no");
    expect(workbench.records.map((r) => r.record_id)).toEqual(["r2"]);
  });

  it("flags a conflict when another writer won in between", async () => {
    const api = twoRecordApi();
    const sneaky = {
      records: api.records.bind(api),
      annotate: async (recordId: string, patch: Parameters<FakeEvalApi["annotate"]>[1]) => {
        // a concurrent annotator's last write lands after ours
        await api.annotate(recordId, patch);
        return api.annotate(recordId, { verdicts: { valid_question: "no" } });
      },
    };
    const workbench = new Workbench(sneaky);
    await workbench.load();
    workbench.setVerdict("valid_question", "yes");
    const clean = await workbench.save();
    expect(clean).toBe(false);
    expect(workbench.conflict).toBe(true);
    expect(workbench.error).toContain("reload");
  });

  it("bad filters surface as load errors", async () => {
    const workbench = new Workbench(twoRecordApi());
    await workbench.load("broken filter");
    expect(workbench.records).toHaveLength(0);
    expect(workbench.error).toBeTruthy();
  });
});
