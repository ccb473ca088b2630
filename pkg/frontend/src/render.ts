import * as vega from "vega";
import * as vegaLite from "vega-lite";

import { RenderRequest, RenderResponse } from "./protocol.js";

const DATUM_CLASS = "vizbench-datum";
const CONTAINER_CLASS = "vizbench-datums";

// route all vega chatter to stderr; stdout carries only protocol lines
const LOGGER = vega.logger(vega.Warn, "error");

/** Field names the spec's encoding channels bind, in first-seen order. */
export function boundFields(specDoc: Record<string, unknown>): string[] {
  const fields: string[] = [];
  const encoding = specDoc.encoding;
  if (typeof encoding !== "object" || encoding === null) {
    return fields;
  }
  for (const def of Object.values(encoding as Record<string, unknown>)) {
    if (typeof def !== "object" || def === null) continue;
    const field = (def as Record<string, unknown>).field;
    if (typeof field === "string" && !fields.includes(field)) {
      fields.push(field);
    }
  }
  return fields;
}

interface SceneMark {
  marktype?: string;
  role?: string;
  items?: SceneNode[];
}

interface SceneItem {
  datum?: unknown;
  items?: SceneNode[];
}

type SceneNode = SceneMark & SceneItem;

/**
 * Datums of data marks, each projected onto the spec-bound fields.
 *
 * The scenegraph alternates mark nodes and item nodes; axes, legends, and
 * grid lines are marks with other roles and never contribute.  Items whose
 * datum holds none of the bound fields (rule marks, synthetic group datums)
 * are dropped rather than emitted empty.
 */
export function collectDatums(root: SceneNode, fields: string[]): Record<string, unknown>[] {
  const out: Record<string, unknown>[] = [];

  const visitMark = (mark: SceneNode): void => {
    if (mark.role === "mark" && mark.marktype !== "group") {
      for (const item of mark.items ?? []) {
        const datum = (item as SceneItem).datum;
        if (typeof datum !== "object" || datum === null) continue;
        const projected: Record<string, unknown> = {};
        for (const field of [...fields].sort()) {
          if (field in (datum as Record<string, unknown>)) {
            projected[field] = (datum as Record<string, unknown>)[field];
          }
        }
        if (Object.keys(projected).length > 0) {
          out.push(projected);
        }
      }
      return;
    }
    for (const item of mark.items ?? []) {
      for (const child of (item as SceneItem).items ?? []) {
        visitMark(child);
      }
    }
  };

  visitMark(root);
  return out;
}

function escapeAttribute(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Append one hidden annotation element per datum before the closing tag. */
export function annotateSvg(svg: string, datums: Record<string, unknown>[]): string {
  const closing = svg.lastIndexOf("</svg>");
  if (closing < 0) {
    return svg;
  }
  const entries = datums
    .map((d) => `<g class="${DATUM_CLASS}" data-datum="${escapeAttribute(JSON.stringify(d))}"/>`)
    .join("");
  const container = `<g class="${CONTAINER_CLASS}" aria-hidden="true" display="none">${entries}</g>`;
  return svg.slice(0, closing) + container + svg.slice(closing);
}

let resvgModule: typeof import("@resvg/resvg-js") | null | undefined;

async function loadResvg(): Promise<typeof import("@resvg/resvg-js") | null> {
  if (resvgModule === undefined) {
    try {
      resvgModule = await import("@resvg/resvg-js");
    } catch {
      resvgModule = null;
    }
  }
  return resvgModule;
}

async function rasterize(svg: string): Promise<string> {
  const resvg = await loadResvg();
  if (resvg === null) {
    throw new Error("png output unavailable: @resvg/resvg-js is not installed");
  }
  const rendered = new resvg.Resvg(svg, { font: { loadSystemFonts: true } });
  return rendered.render().asPng().toString("base64");
}

/**
 * Compile, render, and annotate one request.
 *
 * The spec's data reference is replaced with the request's inline rows, so
 * rendering never touches the filesystem or network.  Compile problems and
 * render problems come back as in-band errors.
 */
export async function renderRequest(request: RenderRequest): Promise<RenderResponse> {
  const outputs = request.outputs ?? ["svg"];

  let specDoc: Record<string, unknown>;
  try {
    const parsed: unknown = JSON.parse(request.spec);
    if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
      throw new Error("spec must be a JSON object");
    }
    specDoc = parsed as Record<string, unknown>;
  } catch (e) {
    return { id: request.id, error: { stage: "compile", message: String(e) } };
  }
  specDoc = { ...specDoc, data: { values: request.data_rows } };

  let runtime: vega.Runtime;
  try {
    const compiled = vegaLite.compile(specDoc as unknown as vegaLite.TopLevelSpec, { logger: LOGGER }).spec;
    runtime = vega.parse(compiled);
  } catch (e) {
    return { id: request.id, error: { stage: "compile", message: String(e) } };
  }

  const view = new vega.View(runtime, { renderer: "none", logger: LOGGER });
  try {
    await view.runAsync();
    // the typings call this a Scene, but the runtime hands back the
    // scenegraph wrapper whose root is the actual scene
    const scene = (view.scenegraph() as unknown as { root: SceneNode }).root;
    const datums = collectDatums(scene, boundFields(specDoc));
    const svg = annotateSvg(await view.toSVG(), datums);
    const response: RenderResponse = { id: request.id };
    if (outputs.includes("svg")) {
      response.svg = svg;
    }
    if (outputs.includes("png")) {
      response.png = await rasterize(svg);
    }
    return response;
  } catch (e) {
    return { id: request.id, error: { stage: "render", message: String(e) } };
  } finally {
    view.finalize();
  }
}
