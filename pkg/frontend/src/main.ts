import readline from "node:readline";

import { HANDSHAKE, parseRequestLine, serializeResponse } from "./protocol.js";
import { renderRequest } from "./render.js";

/**
 * Stdio loop: one JSON request per input line, one JSON response per output
 * line, strictly in request order.  Bad input produces an error response,
 * never an exit; the process ends when stdin closes.
 */
export function main(): void {
  const rl = readline.createInterface({ input: process.stdin, terminal: false, crlfDelay: Infinity });

  process.stdout.write(HANDSHAKE + "\n");

  // a serial queue: requests may arrive pipelined while a render is running
  let tail: Promise<void> = Promise.resolve();

  rl.on("line", (line: string) => {
    if (line.trim() === "") {
      return;
    }
    tail = tail.then(async () => {
      const parsed = parseRequestLine(line);
      const response = "response" in parsed ? parsed.response : await renderRequest(parsed.request);
      process.stdout.write(serializeResponse(response));
    });
  });

  rl.on("close", () => {
    void tail.then(() => process.exit(0));
  });
}

main();
