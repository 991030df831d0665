// View wiring: relation browser on the left, proof tree / negation wizard
// on the right, a depth selector mirroring the REPL's setdepth.

import { ExplorerApi } from "./api.js";
import { TupleBrowser } from "./browser.js";
import { ProofTreeView } from "./tree.js";
import { NegationWizard } from "./wizard.js";
import type { TupleRef } from "./types.js";

export class App {
  readonly api: ExplorerApi;
  readonly browser: TupleBrowser;
  readonly tree: ProofTreeView;
  readonly wizard: NegationWizard;
  private depth: number | null = 5;
  private treePane: HTMLElement;
  private wizardPane: HTMLElement;

  constructor(root: HTMLElement, apiBase: string) {
    this.api = new ExplorerApi(apiBase);

    const layout = document.createElement("div");
    layout.className = "layout";
    const left = document.createElement("div");
    left.className = "left-pane";
    const right = document.createElement("div");
    right.className = "right-pane";
    layout.append(left, right);
    root.appendChild(layout);

    const controls = document.createElement("div");
    controls.className = "depth-controls";
    const label = document.createElement("label");
    label.textContent = "fragment depth: ";
    const select = document.createElement("select");
    for (const value of ["1", "2", "3", "5", "10", "20", "full"]) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = value;
      if (value === "5") option.selected = true;
      select.appendChild(option);
    }
    select.onchange = () => {
      this.depth = select.value === "full" ? null : Number(select.value);
    };
    label.appendChild(select);
    controls.appendChild(label);
    right.appendChild(controls);

    this.treePane = document.createElement("div");
    this.treePane.className = "tree-pane";
    this.wizardPane = document.createElement("div");
    this.wizardPane.className = "wizard-pane";
    right.append(this.treePane, this.wizardPane);

    this.browser = new TupleBrowser(this.api, left, {
      onOpenTuple: (tuple) => void this.showTree(tuple),
    });
    this.tree = new ProofTreeView(this.api, this.treePane, {
      onNotDerivable: (tuple) => void this.showWizard(tuple),
    });
    this.wizard = new NegationWizard(this.api, this.wizardPane, {
      onDerivable: (tuple) => void this.showTree(tuple),
      onViewProof: (tuple) => void this.showTree(tuple),
    });
  }

  async start(): Promise<void> {
    await this.browser.load();
  }

  async showTree(tuple: TupleRef, depth?: number | null): Promise<void> {
    this.wizardPane.textContent = "";
    await this.tree.show(tuple, depth === undefined ? this.depth : depth);
  }

  async showWizard(tuple: TupleRef): Promise<void> {
    this.treePane.textContent = "";
    await this.wizard.start(tuple);
  }
}
