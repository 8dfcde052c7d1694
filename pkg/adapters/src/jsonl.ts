import * as readline from "node:readline";

import { ExtractionRequest, ExtractionResponse, RequestSchema } from "./protocol";

export function writeLine(obj: unknown): void {
  process.stdout.write(JSON.stringify(obj) + "\n");
}

/**
 * Drive a request/response loop over stdin/stdout: one JSON request per
 * line in, one JSON response per line out, in order. Malformed lines get an
 * error response (without crashing the adapter) so the harness can retry.
 */
export async function serveLines(
  handler: (req: ExtractionRequest) => Promise<ExtractionResponse>
): Promise<void> {
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  for await (const line of rl) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    let parsed: ExtractionRequest;
    try {
      parsed = RequestSchema.parse(JSON.parse(trimmed));
    } catch (err) {
      writeLine({ id: "", skills: [], error: `bad request line: ${err}` });
      continue;
    }
    try {
      writeLine(await handler(parsed));
    } catch (err) {
      writeLine({ id: parsed.id, skills: [], error: String(err), retryable: true });
    }
  }
}
