/**
 * Reference LLM adapter over the skillbench/1 stdio protocol.
 *
 *   node dist/llm-adapter.js [--mock] [--mock-tokens IN:OUT]
 *       [--api-url URL] [--model NAME] [--api-key-env VAR]
 *       [--max-tokens N] [--timeout-ms MS]
 *
 * Renders the extraction prompt around each description, calls the chat
 * API (or the offline mock), and returns the raw model output in
 * raw_output together with token usage; the harness parses and scores.
 * API failures become per-request error responses; the adapter stays alive.
 */

import { serveLines, writeLine } from "./jsonl";
import {
  ChatFn,
  EXTRACTION_PROMPT_RU,
  LlmConfig,
  chatApiCaller,
  mockCaller,
  renderPrompt,
  splitSkills,
} from "./llm";
import { handshakeLine } from "./protocol";

interface Args {
  mock: boolean;
  mockTokens?: { in: number; out: number };
  config: LlmConfig;
}

function parseArgs(argv: string[]): Args {
  const args: Args = {
    mock: false,
    config: {
      apiUrl: "https://api.openai.com/v1",
      model: "gpt-4o",
      apiKeyEnv: "OPENAI_API_KEY",
      maxTokens: 512,
      timeoutMs: 60_000,
    },
  };
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case "--mock":
        args.mock = true;
        break;
      case "--mock-tokens": {
        const [tin, tout] = argv[++i].split(":").map((v) => parseInt(v, 10));
        args.mockTokens = { in: tin, out: tout };
        break;
      }
      case "--api-url":
        args.config.apiUrl = argv[++i];
        break;
      case "--model":
        args.config.model = argv[++i];
        break;
      case "--api-key-env":
        args.config.apiKeyEnv = argv[++i];
        break;
      case "--max-tokens":
        args.config.maxTokens = parseInt(argv[++i], 10);
        break;
      case "--timeout-ms":
        args.config.timeoutMs = parseInt(argv[++i], 10);
        break;
      default:
        throw new Error(`unknown argument: ${argv[i]}`);
    }
  }
  return args;
}

async function main(): Promise<number> {
  const args = parseArgs(process.argv.slice(2));
  let chat: ChatFn;
  try {
    chat = args.mock ? mockCaller(args.mockTokens) : chatApiCaller(args.config);
  } catch (err) {
    writeLine({ error: String(err) });
    return 1;
  }

  process.stdout.write(handshakeLine(args.mock ? "llm-mock" : args.config.model, "llm") + "\n");
  await serveLines(async (request) => {
    const prompt = renderPrompt(EXTRACTION_PROMPT_RU, request.desc);
    const started = process.hrtime.bigint();
    const result = await chat(prompt);
    const elapsed = Number(process.hrtime.bigint() - started) / 1e9;
    return {
      id: request.id,
      skills: splitSkills(result.content),
      raw_output: result.content,
      latency_sec: elapsed,
      tokens_in: result.promptTokens,
      tokens_out: result.completionTokens,
    };
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
