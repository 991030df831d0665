// JSON payloads of the explorer API.

export type TupleRef = [string, ...(string | number)[]];

export interface RelationInfo {
  name: string;
  arity: number;
  io: "input" | "output" | "internal";
  attributes: { name: string; type: "symbol" | "number" }[];
  tuples: number;
}

export interface RelationsResponse {
  relations: RelationInfo[];
}

export interface AnnotatedTuple {
  tuple: TupleRef;
  rule: number;
  height: number;
}

export interface TuplesPage {
  relation: string;
  io: string;
  total: number;
  offset: number;
  limit: number;
  tuples: AnnotatedTuple[];
}

export interface TupleNode {
  kind: "tuple";
  tuple: TupleRef;
  rule: number;
  height: number;
  expanded: boolean;
  children: ProofNodeJson[];
}

export interface ConstraintNode {
  kind: "constraint";
  text: string;
  holds: boolean;
}

export type ProofNodeJson = TupleNode | ConstraintNode;

export interface CandidateRule {
  id: number;
  text: string;
  unifies: boolean;
  freeVariables: string[];
  body: string[];
}

export interface CandidatesResponse {
  tuple: TupleRef;
  rules: CandidateRule[];
}

export interface FailedPartJson {
  kind: "atom" | "negation" | "constraint";
  text: string;
  holds: boolean;
  tuple?: TupleRef;
}

export interface FailedSubproofJson {
  tuple: TupleRef;
  rule: number;
  parts: FailedPartJson[];
}

export interface StatsJson {
  iterations: number[];
  ruleFirings: number;
  annotationUpdates: number;
  maxHeight: number;
}

export function tupleText(t: TupleRef): string {
  const args = t.slice(1).map((a) => (typeof a === "number" ? String(a) : `"${a}"`));
  return `${t[0]}(${args.join(", ")})`;
}
