// Sub-query form state: a nonempty list of query inputs. The paper's
// automatic query splitting is out of scope, so researchers write their
// own sub-queries; at least one input always remains.

export interface FormState {
  queries: string[];
}

export function initialForm(): FormState {
  return { queries: [""] };
}

export function addSubquery(state: FormState): FormState {
  return { queries: [...state.queries, ""] };
}

export function removeSubquery(state: FormState, index: number): FormState {
  if (state.queries.length <= 1) {
    return state; // blocked: minimum one query input
  }
  return { queries: state.queries.filter((_, i) => i !== index) };
}

export function updateSubquery(state: FormState, index: number, value: string): FormState {
  return {
    queries: state.queries.map((q, i) => (i === index ? value : q)),
  };
}

/** Queries as submitted: trimmed, blanks dropped. */
export function submittableQueries(state: FormState): string[] {
  return state.queries.map((q) => q.trim()).filter((q) => q.length > 0);
}
