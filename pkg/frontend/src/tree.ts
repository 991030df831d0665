// Collapsible proof-tree view.  Frontier nodes carry their annotation and an
// expand control that fetches one subproof level; rendering stops at a
// budget of visible nodes and continues on demand, so very large fragments
// stay responsive.

import { ApiError, ExplorerApi } from "./api.js";
import { tupleText } from "./types.js";
import type { ProofNodeJson, TupleNode, TupleRef } from "./types.js";

export const RENDER_BUDGET = 1000;

export interface TreeCallbacks {
  onNotDerivable?: (tuple: TupleRef) => void;
}

export class ProofTreeView {
  private rendered = 0;

  constructor(
    private readonly api: ExplorerApi,
    private readonly container: HTMLElement,
    private readonly callbacks: TreeCallbacks = {},
  ) {}

  nodeCount(): number {
    return this.rendered;
  }

  async show(tuple: TupleRef, depth: number | null): Promise<void> {
    this.container.textContent = "";
    this.rendered = 0;
    let root: ProofNodeJson;
    try {
      root = await this.api.explain(tuple, depth);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.renderNotDerivable(tuple);
        return;
      }
      throw err;
    }
    const list = document.createElement("ul");
    list.className = "proof-tree";
    list.appendChild(this.renderNode(root));
    this.container.appendChild(list);
  }

  private renderNotDerivable(tuple: TupleRef): void {
    const note = document.createElement("div");
    note.className = "not-derivable";
    note.textContent = `${tupleText(tuple)} is not derivable - `;
    const link = document.createElement("button");
    link.textContent = "try the negation wizard";
    link.onclick = () => this.callbacks.onNotDerivable?.(tuple);
    note.appendChild(link);
    this.container.appendChild(note);
  }

  private renderNode(node: ProofNodeJson): HTMLLIElement {
    const item = document.createElement("li");
    this.rendered += 1;
    if (node.kind === "constraint") {
      item.className = "constraint-leaf";
      item.textContent = `${node.text} ${node.holds ? "✓" : "✗"}`;
      return item;
    }
    const label = document.createElement("span");
    label.className = "tuple-label";
    label.textContent = tupleText(node.tuple);
    item.appendChild(label);

    const badge = document.createElement("span");
    badge.className = "badge";
    badge.textContent = node.rule === 0 ? "input" : `R${node.rule} h=${node.height}`;
    item.appendChild(badge);

    if (node.expanded) {
      if (node.children.length) {
        item.appendChild(this.renderChildren(node));
        const toggle = document.createElement("button");
        toggle.className = "collapse";
        toggle.textContent = "collapse";
        toggle.onclick = () => {
          const list = item.querySelector(":scope > ul");
          if (list instanceof HTMLElement) {
            const hidden = list.style.display === "none";
            list.style.display = hidden ? "" : "none";
            toggle.textContent = hidden ? "collapse" : "show";
          }
        };
        item.insertBefore(toggle, item.querySelector(":scope > ul"));
      }
    } else {
      const expand = document.createElement("button");
      expand.className = "expand";
      expand.textContent = `expand (height ${node.height})`;
      expand.onclick = async () => {
        const fetched = (await this.api.expand(node.tuple)) as TupleNode;
        expand.remove();
        item.appendChild(this.renderChildren(fetched));
      };
      item.appendChild(expand);
    }
    return item;
  }

  private renderChildren(node: TupleNode): HTMLUListElement {
    const list = document.createElement("ul");
    const queue = node.children.slice();
    this.renderChunk(list, queue);
    return list;
  }

  private renderChunk(list: HTMLUListElement, queue: ProofNodeJson[]): void {
    while (queue.length) {
      if (this.rendered >= RENDER_BUDGET) {
        const item = document.createElement("li");
        const more = document.createElement("button");
        more.className = "render-more";
        more.textContent = `render ${queue.length} more node(s)`;
        more.onclick = () => {
          item.remove();
          this.rendered = 0;
          this.renderChunk(list, queue);
        };
        item.appendChild(more);
        list.appendChild(item);
        return;
      }
      const child = queue.shift();
      if (child) list.appendChild(this.renderNode(child));
    }
  }
}
