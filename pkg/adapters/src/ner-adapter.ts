/**
 * Reference NER adapter: token-classification skill extraction over the
 * skillbench/1 stdio protocol, backed by a lexicon labeler.
 *
 *   node dist/ner-adapter.js [--lexicon FILE] [--name NAME]
 *
 * FILE holds one skill phrase per line. Without --lexicon a small built-in
 * lexicon is used. A missing or unreadable lexicon file is a load failure:
 * the adapter emits an error line and exits nonzero before any handshake.
 */

import * as fs from "node:fs";

import { serveLines, writeLine } from "./jsonl";
import { DEFAULT_LEXICON, decodeSkills, lexiconLabeler } from "./ner";
import { handshakeLine } from "./protocol";

function parseArgs(argv: string[]): { lexiconPath?: string; name: string } {
  let lexiconPath: string | undefined;
  let name = "reference-ner";
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--lexicon") {
      lexiconPath = argv[++i];
    } else if (argv[i] === "--name") {
      name = argv[++i];
    } else {
      throw new Error(`unknown argument: ${argv[i]}`);
    }
  }
  return { lexiconPath, name };
}

async function main(): Promise<number> {
  const { lexiconPath, name } = parseArgs(process.argv.slice(2));
  let phrases = DEFAULT_LEXICON;
  if (lexiconPath) {
    try {
      phrases = fs.readFileSync(lexiconPath, "utf-8").split("\n");
    } catch (err) {
      writeLine({ error: `cannot load lexicon ${lexiconPath}: ${err}` });
      return 1;
    }
  }
  const labeler = lexiconLabeler(phrases);

  process.stdout.write(handshakeLine(name, "ner") + "\n");
  await serveLines(async (request) => {
    const started = process.hrtime.bigint();
    const skills = decodeSkills(request.desc, labeler(request.desc));
    const elapsed = Number(process.hrtime.bigint() - started) / 1e9;
    return { id: request.id, skills, latency_sec: elapsed };
  });
  return 0;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    process.stderr.write(String(err) + "\n");
    process.exit(1);
  }
);
