// Wire types for the studio's JSON API.

export type ParamValue = number | boolean | string | number[];

export interface NodeDoc {
  id: string;
  type: string;
  params: Record<string, ParamValue>;
  position: [number, number];
  prior: string[];
  next: string[];
  group: string | null;
  weight_refs: Record<string, string>;
}

export interface GroupDoc {
  id: string;
  name: string;
  members: string[];
}

export interface GraphDoc {
  format: string;
  version: string;
  seed: number;
  id_counter: number;
  nodes: NodeDoc[];
  groups: GroupDoc[];
}

export interface Diagnostic {
  kind: string;
  message: string;
  nodeId?: string;
}

export interface GraphResponse {
  revision: number;
  graph: GraphDoc;
  diagnostics: Diagnostic[];
}

export interface MutationResponse {
  revision: number;
  diagnostics: Diagnostic[];
  nodeId?: string;
  groupId?: string;
}

export interface CanvasInfo {
  canvasId: string;
  name: string;
  path: string | null;
  revision: number;
}

export interface ParamSpecDoc {
  name: string;
  kind: "int" | "int-list" | "float" | "bool" | "enum";
  default: ParamValue;
  constraint: string;
  choices?: string[];
}

export interface CatalogEntry {
  type: string;
  arityIn: number;
  arityOut: number;
  params: ParamSpecDoc[];
  weightRoles: string[];
}

export interface KernelDoc {
  kernelId: string;
  capabilities: { export: boolean; import: boolean };
  artifactExtension: string;
}

export interface CompileResponse {
  artifactPath: string;
  text: string;
  diagnostics: Diagnostic[];
}

export interface FsEntry {
  name: string;
  kind: "dir" | "file";
  size?: number;
}

export type Mutation =
  | { op: "node.add"; type: string; params?: Record<string, ParamValue>;
      position: [number, number] }
  | { op: "node.remove"; nodeId: string }
  | { op: "node.update"; nodeId: string; params?: Record<string, ParamValue>;
      position?: [number, number] }
  | { op: "edge.connect"; src: string; dst: string }
  | { op: "edge.disconnect"; src: string; dst: string }
  | { op: "group.create"; nodeIds: string[]; name: string }
  | { op: "group.dissolve"; groupId: string };
