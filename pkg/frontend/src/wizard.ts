// Non-existence wizard: pick a candidate rule, fill the unbound variables,
// then read the marked subproof.  Failing atoms can be investigated further
// (re-entering the wizard); holding atoms link to the proof-tree view.

import { ApiError, ExplorerApi } from "./api.js";
import { tupleText } from "./types.js";
import type { CandidateRule, FailedSubproofJson, TupleRef } from "./types.js";

export interface WizardCallbacks {
  onDerivable: (tuple: TupleRef) => void;
  onViewProof: (tuple: TupleRef) => void;
}

export class NegationWizard {
  constructor(
    private readonly api: ExplorerApi,
    private readonly container: HTMLElement,
    private readonly callbacks: WizardCallbacks,
  ) {}

  async start(tuple: TupleRef): Promise<void> {
    this.container.textContent = "";
    const heading = document.createElement("h2");
    heading.textContent = `Why is ${tupleText(tuple)} absent?`;
    this.container.appendChild(heading);

    let candidates;
    try {
      candidates = await this.api.negationCandidates(tuple);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.callbacks.onDerivable(tuple);
        return;
      }
      throw err;
    }

    const step = document.createElement("p");
    step.className = "wizard-step";
    step.textContent = "Step 1: pick a candidate rule";
    this.container.appendChild(step);

    const list = document.createElement("ol");
    list.className = "candidate-rules";
    for (const rule of candidates.rules) {
      list.appendChild(this.renderCandidate(tuple, rule));
    }
    this.container.appendChild(list);
  }

  private renderCandidate(tuple: TupleRef, rule: CandidateRule): HTMLLIElement {
    const item = document.createElement("li");
    const text = document.createElement("code");
    text.textContent = rule.text;
    item.appendChild(text);
    if (!rule.unifies) {
      const note = document.createElement("span");
      note.className = "no-unify";
      note.textContent = " (head does not match this tuple)";
      item.appendChild(note);
      return item;
    }
    const bound = document.createElement("div");
    bound.className = "bound-body";
    bound.textContent = `with the head bound: ${rule.body.join(", ")}`;
    item.appendChild(bound);
    const pick = document.createElement("button");
    pick.className = "pick-rule";
    pick.textContent = `pick rule ${rule.id}`;
    pick.onclick = () => void this.bindStep(tuple, rule);
    item.appendChild(pick);
    return item;
  }

  private async bindStep(tuple: TupleRef, rule: CandidateRule): Promise<void> {
    this.container.textContent = "";
    const heading = document.createElement("h2");
    heading.textContent = `${tupleText(tuple)} via rule ${rule.id}`;
    this.container.appendChild(heading);

    if (!rule.freeVariables.length) {
      await this.evaluate(tuple, rule, {});
      return;
    }

    const step = document.createElement("p");
    step.className = "wizard-step";
    step.textContent = "Step 2: pick a value for each unbound variable";
    this.container.appendChild(step);

    const suggestions = await this.collectSuggestions(rule);
    const form = document.createElement("form");
    const inputs = new Map<string, HTMLInputElement>();
    for (const name of rule.freeVariables) {
      const label = document.createElement("label");
      label.textContent = `${name}: `;
      const input = document.createElement("input");
      input.name = name;
      input.setAttribute("list", "wizard-suggestions");
      inputs.set(name, input);
      label.appendChild(input);
      form.appendChild(label);
    }
    const datalist = document.createElement("datalist");
    datalist.id = "wizard-suggestions";
    for (const value of suggestions) {
      const option = document.createElement("option");
      option.value = value;
      datalist.appendChild(option);
    }
    form.appendChild(datalist);
    const submit = document.createElement("button");
    submit.textContent = "evaluate subproof";
    submit.onclick = (event) => {
      event.preventDefault();
      const bindings: Record<string, string | number> = {};
      for (const [name, input] of inputs) {
        const raw = input.value.trim();
        bindings[name] = /^-?\d+$/.test(raw) ? Number(raw) : raw;
      }
      void this.evaluate(tuple, rule, bindings);
    };
    form.appendChild(submit);
    this.container.appendChild(form);
  }

  private async collectSuggestions(rule: CandidateRule): Promise<string[]> {
    const relations = new Set<string>();
    for (const part of rule.body) {
      const match = /^!?([A-Za-z_]\w*)\(/.exec(part);
      if (match) relations.add(match[1]);
    }
    const values = new Set<string>();
    for (const relation of relations) {
      try {
        const page = await this.api.tuples(relation, { limit: 100 });
        for (const entry of page.tuples) {
          for (const value of entry.tuple.slice(1)) {
            if (typeof value === "string") values.add(value);
          }
        }
      } catch {
        // suggestions are best effort
      }
    }
    return [...values].sort();
  }

  private async evaluate(
    tuple: TupleRef,
    rule: CandidateRule,
    bindings: Record<string, string | number>,
  ): Promise<void> {
    const failed = await this.api.negationEvaluate(tuple, rule.id, bindings);
    this.renderFailedSubproof(failed);
  }

  private renderFailedSubproof(failed: FailedSubproofJson): void {
    this.container.textContent = "";
    const heading = document.createElement("h2");
    heading.textContent = `Failed subproof of ${tupleText(failed.tuple)} via rule ${failed.rule}`;
    this.container.appendChild(heading);

    const list = document.createElement("ul");
    list.className = "failed-subproof";
    for (const part of failed.parts) {
      const item = document.createElement("li");
      item.className = part.holds ? "holds" : "fails";
      const mark = document.createElement("span");
      mark.className = "mark";
      mark.textContent = part.holds ? "✓" : "✗";
      const text = document.createElement("code");
      text.textContent = part.text;
      item.append(text, mark);
      if (part.tuple && part.kind === "atom") {
        const action = document.createElement("button");
        if (part.holds) {
          action.className = "view-proof";
          action.textContent = "view proof";
          const target = part.tuple;
          action.onclick = () => this.callbacks.onViewProof(target);
        } else {
          action.className = "investigate";
          action.textContent = "investigate";
          const target = part.tuple;
          action.onclick = () => void this.start(target);
        }
        item.appendChild(action);
      }
      list.appendChild(item);
    }
    this.container.appendChild(list);
  }
}
