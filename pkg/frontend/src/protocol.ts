export const PROTOCOL_VERSION = 1;

export const HANDSHAKE = JSON.stringify({ ready: true, protocol: PROTOCOL_VERSION });

export type OutputKind = "svg" | "png";

export interface RenderRequest {
  id: string;
  /** Vega-Lite specification as JSON text. */
  spec: string;
  /** Inline rows substituted for the spec's data reference. */
  data_rows: Record<string, unknown>[];
  /** Outputs to produce; defaults to ["svg"]. */
  outputs?: OutputKind[];
}

export interface RenderError {
  stage: "compile" | "render";
  message: string;
}

export interface RenderResponse {
  id: string;
  svg?: string;
  png?: string;
  error?: RenderError;
}

function errorResponse(id: string, stage: RenderError["stage"], message: string): RenderResponse {
  return { id, error: { stage, message } };
}

/**
 * Parse one input line into a request, or into the error response that
 * should be written instead.  A line that is not a JSON object cannot name
 * a request id, so its error response carries an empty one.
 */
export function parseRequestLine(line: string): { request: RenderRequest } | { response: RenderResponse } {
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch (e) {
    return { response: errorResponse("", "compile", `request is not valid JSON: ${String(e)}`) };
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    return { response: errorResponse("", "compile", "request must be a JSON object") };
  }
  const obj = doc as Record<string, unknown>;
  const id = typeof obj.id === "string" ? obj.id : "";
  if (typeof obj.spec !== "string") {
    return { response: errorResponse(id, "compile", "request needs a spec property holding JSON text") };
  }
  const rows = obj.data_rows ?? [];
  if (!Array.isArray(rows) || rows.some((r) => typeof r !== "object" || r === null || Array.isArray(r))) {
    return { response: errorResponse(id, "compile", "data_rows must be an array of objects") };
  }
  let outputs: OutputKind[] | undefined;
  if (obj.outputs !== undefined) {
    if (
      !Array.isArray(obj.outputs) ||
      obj.outputs.length === 0 ||
      obj.outputs.some((o) => o !== "svg" && o !== "png")
    ) {
      return { response: errorResponse(id, "compile", 'outputs must be a non-empty subset of ["svg", "png"]') };
    }
    outputs = obj.outputs as OutputKind[];
  }
  return {
    request: {
      id,
      spec: obj.spec,
      data_rows: rows as Record<string, unknown>[],
      outputs,
    },
  };
}

/** Serialize a response as one output line, stable key order. */
export function serializeResponse(res: RenderResponse): string {
  const ordered: Record<string, unknown> = { id: res.id };
  if (res.svg !== undefined) ordered.svg = res.svg;
  if (res.png !== undefined) ordered.png = res.png;
  if (res.error !== undefined) ordered.error = { stage: res.error.stage, message: res.error.message };
  return JSON.stringify(ordered) + "\n";
}
