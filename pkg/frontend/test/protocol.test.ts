import { describe, expect, it } from "vitest";

import { HANDSHAKE, parseRequestLine, serializeResponse } from "../src/protocol.js";

describe("handshake", () => {
  it("announces readiness and the protocol version", () => {
    expect(JSON.parse(HANDSHAKE)).toEqual({ ready: true, protocol: 1 });
  });
});

describe("parseRequestLine", () => {
  it("accepts a minimal request and applies no outputs default here", () => {
    const parsed = parseRequestLine(JSON.stringify({ id: "a", spec: "{}", data_rows: [] }));
    expect(parsed).toEqual({ request: { id: "a", spec: "{}", data_rows: [], outputs: undefined } });
  });

  it("accepts explicit outputs", () => {
    const parsed = parseRequestLine(
      JSON.stringify({ id: "a", spec: "{}", data_rows: [{ x: 1 }], outputs: ["svg", "png"] }),
    );
    if (!("request" in parsed)) throw new Error("expected a request");
    expect(parsed.request.outputs).toEqual(["svg", "png"]);
    expect(parsed.request.data_rows).toEqual([{ x: 1 }]);
  });

  it("turns non-JSON lines into an error response with an empty id", () => {
    const parsed = parseRequestLine("not json at all");
    if (!("response" in parsed)) throw new Error("expected a response");
    expect(parsed.response.id).toBe("");
    expect(parsed.response.error?.stage).toBe("compile");
  });

  it("rejects JSON that is not an object", () => {
    const parsed = parseRequestLine("[1, 2, 3]");
    if (!("response" in parsed)) throw new Error("expected a response");
    expect(parsed.response.error?.message).toContain("JSON object");
  });

  it("keeps the request id in the error when the spec is missing", () => {
    const parsed = parseRequestLine(JSON.stringify({ id: "keep-me", data_rows: [] }));
    if (!("response" in parsed)) throw new Error("expected a response");
    expect(parsed.response.id).toBe("keep-me");
    expect(parsed.response.error?.message).toContain("spec");
  });

  it("rejects data_rows that are not objects", () => {
    const parsed = parseRequestLine(JSON.stringify({ id: "a", spec: "{}", data_rows: [1] }));
    if (!("response" in parsed)) throw new Error("expected a response");
    expect(parsed.response.error?.message).toContain("data_rows");
  });

  it("rejects unknown or empty outputs", () => {
    for (const outputs of [[], ["pdf"], ["svg", "bmp"]]) {
      const parsed = parseRequestLine(JSON.stringify({ id: "a", spec: "{}", data_rows: [], outputs }));
      expect("response" in parsed && parsed.response.error?.message).toContain("outputs");
    }
  });
});

describe("serializeResponse", () => {
  it("writes one newline-terminated line with stable key order", () => {
    const line = serializeResponse({ id: "a", svg: "<svg/>" });
    expect(line).toBe('{"id":"a","svg":"<svg/>"}\n');
  });

  it("serializes errors with stage then message", () => {
    const line = serializeResponse({ id: "a", error: { stage: "render", message: "boom" } });
    expect(line).toBe('{"id":"a","error":{"stage":"render","message":"boom"}}\n');
  });
});
