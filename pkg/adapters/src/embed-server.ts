/**
 * Embedding microservice implementing the harness's /embed contract with the
 * deterministic trigram embedder:
 *
 *   POST /embed {"texts": [...]} -> {"vectors": [[...], ...], "dim": 256,
 *                                    "normalized": true}
 *
 *   node dist/embed-server.js [--port N]
 *
 * Prints {"listening": PORT} on stdout once ready (port 0 picks a free one).
 */

import * as http from "node:http";

import { DIM, trigramEmbed } from "./trigram";

export function createEmbedServer(): http.Server {
  return http.createServer((req, res) => {
    const reply = (status: number, body: unknown) => {
      const payload = JSON.stringify(body);
      res.writeHead(status, {
        "Content-Type": "application/json",
        "Content-Length": Buffer.byteLength(payload),
      });
      res.end(payload);
    };

    if (req.method === "GET" && req.url === "/health") {
      reply(200, { ok: true, dim: DIM });
      return;
    }
    if (req.method !== "POST" || req.url !== "/embed") {
      reply(404, { error: "not found" });
      return;
    }
    const chunks: Buffer[] = [];
    req.on("data", (chunk) => chunks.push(chunk));
    req.on("end", () => {
      try {
        const body = JSON.parse(Buffer.concat(chunks).toString("utf-8"));
        if (!Array.isArray(body.texts) || body.texts.some((t: unknown) => typeof t !== "string" || !t)) {
          reply(400, { error: "texts must be a list of non-empty strings" });
          return;
        }
        const vectors = body.texts.map((t: string) => trigramEmbed(t));
        reply(200, { vectors, dim: DIM, normalized: true });
      } catch (err) {
        reply(400, { error: String(err) });
      }
    });
  });
}

function main(): void {
  let port = 0;
  const argv = process.argv.slice(2);
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--port") {
      port = parseInt(argv[++i], 10);
    } else {
      throw new Error(`unknown argument: ${argv[i]}`);
    }
  }
  const server = createEmbedServer();
  server.listen(port, "127.0.0.1", () => {
    const address = server.address();
    const actual = typeof address === "object" && address ? address.port : port;
    process.stdout.write(JSON.stringify({ listening: actual }) + "\n");
  });
}

if (require.main === module) {
  main();
}
