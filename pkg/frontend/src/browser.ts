// Relation list and paged tuple table with a prefix filter; clicking a row
// opens the tuple as a proof-tree root.

import { ExplorerApi } from "./api.js";
import type { RelationInfo, TupleRef, TuplesPage } from "./types.js";

export interface BrowserCallbacks {
  onOpenTuple: (tuple: TupleRef) => void;
}

const PAGE_SIZE = 25;

export class TupleBrowser {
  private relationPane: HTMLElement;
  private tablePane: HTMLElement;
  private current: string | null = null;
  private offset = 0;
  private prefix = "";

  constructor(
    private readonly api: ExplorerApi,
    container: HTMLElement,
    private readonly callbacks: BrowserCallbacks,
  ) {
    this.relationPane = document.createElement("div");
    this.relationPane.className = "relation-list";
    this.tablePane = document.createElement("div");
    this.tablePane.className = "tuple-table";
    container.appendChild(this.relationPane);
    container.appendChild(this.tablePane);
  }

  async load(): Promise<void> {
    const { relations } = await this.api.relations();
    this.relationPane.textContent = "";
    const list = document.createElement("ul");
    for (const relation of relations) {
      list.appendChild(this.renderRelationItem(relation));
    }
    this.relationPane.appendChild(list);
  }

  private renderRelationItem(relation: RelationInfo): HTMLLIElement {
    const item = document.createElement("li");
    const button = document.createElement("button");
    button.className = "relation-name";
    button.textContent = `${relation.name} (${relation.tuples})`;
    button.onclick = () => this.openRelation(relation.name);
    item.appendChild(button);
    const io = document.createElement("span");
    io.className = `io io-${relation.io}`;
    io.textContent = relation.io;
    item.appendChild(io);
    return item;
  }

  async openRelation(name: string): Promise<void> {
    this.current = name;
    this.offset = 0;
    this.prefix = "";
    await this.refresh();
  }

  async refresh(): Promise<void> {
    if (!this.current) return;
    const page = await this.api.tuples(this.current, {
      prefix: this.prefix || undefined,
      limit: PAGE_SIZE,
      offset: this.offset,
    });
    this.renderTable(page);
  }

  private renderTable(page: TuplesPage): void {
    this.tablePane.textContent = "";

    const heading = document.createElement("h2");
    heading.textContent = page.relation;
    this.tablePane.appendChild(heading);

    const filter = document.createElement("input");
    filter.className = "prefix-filter";
    filter.placeholder = "prefix filter (comma-separated)";
    filter.value = this.prefix;
    filter.onchange = () => {
      this.prefix = filter.value.trim();
      this.offset = 0;
      void this.refresh();
    };
    this.tablePane.appendChild(filter);

    if (page.total === 0) {
      const empty = document.createElement("p");
      empty.className = "empty-state";
      empty.textContent = "no tuples";
      this.tablePane.appendChild(empty);
      return;
    }

    const table = document.createElement("table");
    const head = document.createElement("tr");
    for (const column of ["tuple", "rule", "height"]) {
      const cell = document.createElement("th");
      cell.textContent = column;
      head.appendChild(cell);
    }
    table.appendChild(head);
    for (const entry of page.tuples) {
      const row = document.createElement("tr");
      row.className = "tuple-row";
      const name = document.createElement("td");
      const open = document.createElement("button");
      open.textContent = entry.tuple
        .slice(1)
        .map((v) => String(v))
        .join(", ");
      open.onclick = () => this.callbacks.onOpenTuple(entry.tuple);
      name.appendChild(open);
      row.appendChild(name);
      const rule = document.createElement("td");
      rule.textContent = entry.rule === 0 ? "-" : `R${entry.rule}`;
      row.appendChild(rule);
      const height = document.createElement("td");
      height.textContent = String(entry.height);
      row.appendChild(height);
      table.appendChild(row);
    }
    this.tablePane.appendChild(table);

    const pager = document.createElement("div");
    pager.className = "pager";
    const status = document.createElement("span");
    const upper = Math.min(page.offset + page.tuples.length, page.total);
    status.textContent = `${page.offset + 1}-${upper} of ${page.total}`;
    const prev = document.createElement("button");
    prev.textContent = "prev";
    prev.disabled = page.offset === 0;
    prev.onclick = () => {
      this.offset = Math.max(0, this.offset - PAGE_SIZE);
      void this.refresh();
    };
    const next = document.createElement("button");
    next.textContent = "next";
    next.disabled = upper >= page.total;
    next.onclick = () => {
      this.offset += PAGE_SIZE;
      void this.refresh();
    };
    pager.append(prev, status, next);
    this.tablePane.appendChild(pager);
  }
}
