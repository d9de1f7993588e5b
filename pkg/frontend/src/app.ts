// Bootstrap: wires the form to the API and swaps rendered HTML into the
// page. One query in flight at a time; a new submission aborts the
// previous request so a stale response never renders.

import { getHealth, postQuery } from "./api.js";
import {
  addSubquery,
  initialForm,
  removeSubquery,
  submittableQueries,
  updateSubquery,
  type FormState,
} from "./form.js";
import { renderError, renderLoading, renderResults } from "./render.js";

export function mount(root: HTMLElement): void {
  let form: FormState = initialForm();
  let inflight: AbortController | null = null;
  let generation = 0;

  const formEl = document.createElement("form");
  formEl.className = "query-form";
  const inputs = document.createElement("div");
  inputs.className = "subqueries";
  const controls = document.createElement("div");
  controls.innerHTML =
    `<button type="button" data-action="add">Add sub-query</button>` +
    `<button type="submit">Search</button>`;
  const status = document.createElement("div");
  status.className = "service-status";
  const results = document.createElement("div");
  results.className = "results";
  formEl.append(inputs, controls);
  root.append(status, formEl, results);

  function redrawForm(): void {
    inputs.innerHTML = "";
    form.queries.forEach((value, index) => {
      const row = document.createElement("div");
      row.className = "subquery-row";
      const input = document.createElement("input");
      input.type = "text";
      input.placeholder = "e.g. incubation period in humans";
      input.value = value;
      input.addEventListener("input", () => {
        form = updateSubquery(form, index, input.value);
      });
      const remove = document.createElement("button");
      remove.type = "button";
      remove.textContent = "−";
      remove.disabled = form.queries.length <= 1;
      remove.addEventListener("click", () => {
        form = removeSubquery(form, index);
        redrawForm();
      });
      row.append(input, remove);
      inputs.append(row);
    });
  }

  async function submit(): Promise<void> {
    const queries = submittableQueries(form);
    if (queries.length === 0) {
      results.innerHTML = renderError("Enter at least one query.");
      return;
    }
    inflight?.abort();
    inflight = new AbortController();
    const mine = ++generation;
    results.innerHTML = renderLoading();
    try {
      const response = await postQuery(
        { queries },
        { signal: inflight.signal },
      );
      if (mine === generation) {
        results.innerHTML = renderResults(response);
      }
    } catch (error) {
      if (error instanceof DOMException && error.name === "AbortError") {
        return; // superseded by a newer submission
      }
      if (mine === generation) {
        results.innerHTML = renderError(String(error));
        results
          .querySelector("[data-action=retry]")
          ?.addEventListener("click", () => void submit());
      }
    }
  }

  controls
    .querySelector("[data-action=add]")!
    .addEventListener("click", () => {
      form = addSubquery(form);
      redrawForm();
    });
  formEl.addEventListener("submit", (event) => {
    event.preventDefault();
    void submit();
  });

  redrawForm();
  void getHealth()
    .then((health) => {
      status.textContent =
        health.status === "ok"
          ? `index ready: ${health.n_paragraphs} paragraphs`
          : `service degraded`;
    })
    .catch(() => {
      status.textContent = "service unreachable";
    });
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) mount(root);
}
