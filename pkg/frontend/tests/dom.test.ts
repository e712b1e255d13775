import { beforeEach, describe, expect, it } from "vitest";

import { AskPage } from "../src/askPage.js";
import { renderAskPage, renderWorkbench } from "../src/dom.js";
import { Workbench } from "../src/workbench.js";
import { FakeAskApi, FakeEvalApi, makeAskResponse, makeRecord } from "./fakes.js";

beforeEach(() => {
  document.body.innerHTML = '<main id="app"></main>';
});

function app(): HTMLElement {
  return document.getElementById("app")!;
}

describe("ask page rendering", () => {
  it("answered response renders sidebar with links and bold terms", async () => {
    const page = new AskPage(new FakeAskApi());
    await page.submit("what is the pre-industrial level of co2 on earth?");
    renderAskPage(app(), page);

    const sidebar = app().querySelector(".answer-sidebar")!;
    expect(sidebar).not.toBeNull();
    expect(sidebar.querySelectorAll(".answer-body a").length).toBeGreaterThanOrEqual(1);
    const bold = [...sidebar.querySelectorAll(".answer-body strong")].map((n) => n.textContent);
    expect(bold).toContain("pre-industrial");
    const chips = [...sidebar.querySelectorAll(".term-chip")].map((n) => n.textContent);
    expect(chips).toEqual(makeAskResponse().highlighted_terms);
  });

  it("renders exactly three 1-click feedback options", async () => {
    const page = new AskPage(new FakeAskApi());
    await page.submit("question?");
    renderAskPage(app(), page);
    const buttons = app().querySelectorAll<HTMLButtonElement>(".feedback-option");
    expect(buttons).toHaveLength(3);
    expect([...buttons].map((b) => b.dataset.rating)).toEqual([
      "helpful",
      "somewhat-helpful",
      "unhelpful",
    ]);
    expect([...buttons].every((b) => !b.disabled)).toBe(true);
  });

  it("clicking an option posts once and disables the widget", async () => {
    const api = new FakeAskApi();
    const page = new AskPage(api);
    page.onChange = () => renderAskPage(app(), page);
    await page.submit("question?");
    renderAskPage(app(), page);

    const button = app().querySelector<HTMLButtonElement>('[data-rating="unhelpful"]')!;
    button.click();
    await new Promise((resolve) => setTimeout(resolve, 0));

    expect(api.feedbackPosts).toEqual([
      { requestId: makeAskResponse().request_id, rating: "unhelpful" },
    ]);
    const buttons = app().querySelectorAll<HTMLButtonElement>(".feedback-option");
    expect([...buttons].every((b) => b.disabled)).toBe(true);
    // clicking a disabled re-render sends nothing further
    buttons[0].click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(api.feedbackPosts).toHaveLength(1);
  });

  it("rejection notice renders without a sidebar", async () => {
    const api = new FakeAskApi();
    api.response = async () => {
      const { ApiError } = await import("../src/api.js");
      throw new ApiError(422, { outcome: "rejected", categories: ["injection"] });
    };
    const page = new AskPage(api);
    await page.submit("<script>x</script>");
    renderAskPage(app(), page);
    expect(app().querySelector(".notice")!.textContent).toContain("rejected");
    expect(app().querySelector(".answer-sidebar")).toBeNull();
  });

  it("answer markup comes from the server payload only", async () => {
    const api = new FakeAskApi();
    api.response = makeAskResponse({ answer_html: "<p>plain server answer</p>", highlighted_terms: [] });
    const page = new AskPage(api);
    await page.submit("question?");
    renderAskPage(app(), page);
    const body = app().querySelector(".answer-body")!;
    expect(body.innerHTML).toBe("<p>plain server answer</p>");
  });
});

describe("workbench rendering", () => {
  it("shows the three panes with question metadata, answer, and criteria", async () => {
    const workbench = new Workbench(new FakeEvalApi([makeRecord()]));
    await workbench.load();
    renderWorkbench(app(), workbench);

    expect(app().querySelector(".question-pane .question-text")!.textContent).toBe(
      makeRecord().question,
    );
    const metaText = app().querySelector(".question-pane .meta")!.textContent!;
    expect(metaText).toContain("en");
    expect(metaText).toContain("what-is");
    expect(app().querySelectorAll(".answer-pane .answer-body strong")).toHaveLength(1);
    expect(app().querySelectorAll(".criteria-pane .criterion")).toHaveLength(5);
    expect(app().querySelectorAll(".criteria-pane .verdict")).toHaveLength(10);
  });

  it("clicking verdict buttons updates the draft and enables save", async () => {
    const workbench = new Workbench(new FakeEvalApi([makeRecord()]));
    workbench.onChange = () => renderWorkbench(app(), workbench);
    await workbench.load();

    const row = app().querySelector('[data-criterion="valid_question"]')!;
    row.querySelector<HTMLButtonElement>('[data-value="yes"]')!.click();
    expect(workbench.draft.valid_question).toBe("yes");
    const save = app().querySelector<HTMLButtonElement>(".save-button")!;
    expect(save.disabled).toBe(false);
  });

  it("saving through the UI persists and re-renders server state", async () => {
    const api = new FakeEvalApi([makeRecord()]);
    const workbench = new Workbench(api);
    workbench.onChange = () => renderWorkbench(app(), workbench);
    await workbench.load();

    app()
      .querySelector<HTMLButtonElement>('[data-criterion="article_exists"] [data-value="yes"]')!
      .click();
    app().querySelector<HTMLButtonElement>(".save-button")!.click();
    await new Promise((resolve) => setTimeout(resolve, 0));

    expect(api.store.get("r1")!.verdicts.article_exists).toBe("yes");
    const selected = app().querySelector('[data-criterion="article_exists"] .verdict.selected')!;
    expect(selected.textContent).toBe("yes");
  });

  it("workflow violation renders inline", async () => {
    const workbench = new Workbench(new FakeEvalApi([makeRecord()]));
    workbench.onChange = () => renderWorkbench(app(), workbench);
    await workbench.load();
    app()
      .querySelector<HTMLButtonElement>('[data-criterion="good_answer"] [data-value="yes"]')!
      .click();
    expect(app().querySelector(".error-notice")!.textContent).toContain("good_answer");
  });

  it("conflict shows a reload prompt button", async () => {
    const api = new FakeEvalApi([makeRecord()]);
    const sneaky = {
      records: api.records.bind(api),
      annotate: async (id: string, patch: Parameters<FakeEvalApi["annotate"]>[1]) => {
        await api.annotate(id, patch);
        return api.annotate(id, { verdicts: { valid_question: "no" } });
      },
    };
    const workbench = new Workbench(sneaky);
    workbench.onChange = () => renderWorkbench(app(), workbench);
    await workbench.load();
    workbench.setVerdict("valid_question", "yes");
    await workbench.save();
    expect(app().querySelector(".reload-button")).not.toBeNull();
  });
});
