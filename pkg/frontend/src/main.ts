/** Page bootstrap: wires state to the DOM based on data-page. */

import { ApiClient } from "./api.js";
import { AskPage } from "./askPage.js";
import { renderAskPage, renderWorkbench } from "./dom.js";
import { Workbench } from "./workbench.js";

function bootAsk(api: ApiClient): void {
  const root = document.getElementById("app")!;
  const input = document.getElementById("search-input") as HTMLInputElement;
  const page = new AskPage(api);
  page.onChange = () => renderAskPage(root, page);
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") void page.submit(input.value);
  });
}

function bootWorkbench(api: ApiClient): void {
  const root = document.getElementById("app")!;
  const workbench = new Workbench(api, "workbench-user");
  workbench.onChange = () => renderWorkbench(root, workbench);
  document.addEventListener("keydown", (event) => {
    const target = event.target as HTMLElement | null;
    if (target instanceof HTMLInputElement || target instanceof HTMLTextAreaElement) return;
    const action = workbench.handleKey(event.key);
    if (action?.kind === "focus") {
      event.preventDefault();
      const row = document.querySelector<HTMLElement>(`[data-criterion="${action.criterion}"] button`);
      row?.focus();
    }
  });
  void workbench.load();
}

const api = new ApiClient("");
if (document.body.dataset.page === "workbench") {
  bootWorkbench(api);
} else {
  bootAsk(api);
}
