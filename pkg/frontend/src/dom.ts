/** DOM rendering for both pages.
 *
 * The answer body is the one place innerHTML is used, and only with the
 * server-sanitized HTML subset; every other node is built with textContent.
 */

import { Link, RATINGS, Rating } from "./api.js";
import { AskPage } from "./askPage.js";
import { CRITERIA, CRITERION_LABELS, Workbench } from "./workbench.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function linkList(links: Link[]): HTMLElement {
  const list = el("ul", "links");
  for (const link of links) {
    const item = el("li");
    const anchor = el("a", "", link.title);
    anchor.href = link.url;
    item.append(anchor);
    list.append(item);
  }
  return list;
}

export const RATING_LABELS: Record<Rating, string> = {
  helpful: "Helpful",
  "somewhat-helpful": "Somewhat helpful",
  unhelpful: "Unhelpful",
};

export function renderAskPage(root: HTMLElement, page: AskPage): void {
  root.textContent = "";

  if (page.notice) {
    root.append(el("div", "notice", page.notice));
  }
  if (!page.response) return;

  const results = el("section", "results");
  results.append(el("h2", "", "Search results"));
  results.append(linkList(page.response.links));
  root.append(results);

  if (!page.showSidebar) return;
  const sidebar = el("aside", "answer-sidebar");
  sidebar.append(el("h2", "", "Answer"));

  const answer = el("div", "answer-body");
  // server-sanitized subset only (p, strong, a, ul, li)
  answer.innerHTML = page.response.answer_html ?? "";
  sidebar.append(answer);

  if (page.response.highlighted_terms.length) {
    const terms = el("div", "terms");
    terms.append(el("span", "terms-label", "Impactful terms: "));
    for (const term of page.response.highlighted_terms) {
      terms.append(el("span", "term-chip", term));
    }
    sidebar.append(terms);
  }

  const widget = el("div", "feedback");
  widget.append(el("span", "feedback-label", "Was this answer helpful?"));
  for (const rating of RATINGS) {
    const button = el("button", "feedback-option", RATING_LABELS[rating]);
    button.dataset.rating = rating;
    button.disabled = page.feedbackDisabled;
    button.addEventListener("click", () => void page.clickFeedback(rating));
    widget.append(button);
  }
  if (page.feedbackState === "sent" && page.sentRating) {
    widget.append(el("span", "feedback-thanks", "Thanks for the feedback."));
  }
  sidebar.append(widget);
  root.append(sidebar);
}

export function renderWorkbench(root: HTMLElement, workbench: Workbench): void {
  root.textContent = "";
  const record = workbench.current;

  const bar = el("div", "filter-bar");
  const filterInput = el("input", "filter-input");
  filterInput.value = workbench.filter;
  filterInput.placeholder = 'filter, e.g. article_exists=yes AND search_success=no';
  filterInput.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void workbench.load(filterInput.value);
  });
  const position = el(
    "span",
    "position",
    workbench.records.length
      ? `${workbench.index + 1} / ${workbench.records.length}`
      : "no records",
  );
  bar.append(filterInput, position);
  root.append(bar);

  if (workbench.error) {
    const notice = el("div", "notice error-notice", workbench.error);
    if (workbench.conflict) {
      const reload = el("button", "reload-button", "Reload");
      reload.addEventListener("click", () => void workbench.load());
      notice.append(" ", reload);
    }
    root.append(notice);
  }
  if (!record) return;

  const panes = el("div", "panes");

  const left = el("section", "pane question-pane");
  left.append(el("h2", "", "Question"));
  left.append(el("p", "question-text", record.question));
  const meta = el("dl", "meta");
  for (const [label, value] of [
    ["Language", record.language],
    ["Class", record.qclass || "—"],
    ["Outcome", record.outcome],
    ["Asked", record.created_at],
  ]) {
    meta.append(el("dt", "", label), el("dd", "", value));
  }
  left.append(meta);

  const middle = el("section", "pane answer-pane");
  middle.append(el("h2", "", "Answer shown to the user"));
  const answer = el("div", "answer-body");
  answer.innerHTML = record.answer_html; // server-sanitized subset only
  middle.append(answer, linkList(record.links));

  const right = el("section", "pane criteria-pane");
  right.append(el("h2", "", "Criteria"));
  for (const name of CRITERIA) {
    const row = el("div", "criterion");
    row.dataset.criterion = name;
    row.append(el("span", "criterion-label", CRITERION_LABELS[name]));
    for (const value of ["yes", "no"] as const) {
      const button = el(
        "button",
        "verdict" + (workbench.draft[name] === value ? " selected" : ""),
        value,
      );
      button.dataset.value = value;
      button.addEventListener("click", () => workbench.setVerdict(name, value));
      row.append(button);
    }
    right.append(row);
  }
  const save = el("button", "save-button", workbench.saving ? "Saving…" : "Save");
  save.disabled = workbench.saving || !workbench.dirty;
  save.addEventListener("click", () => void workbench.save());
  right.append(save);

  panes.append(left, middle, right);
  root.append(panes);
}
