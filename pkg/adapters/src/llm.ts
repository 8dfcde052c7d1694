/**
 * Chat-API skill extraction: render the extraction prompt, call an
 * OpenAI-compatible chat endpoint, hand the raw semicolon-separated output
 * back to the harness (which owns the parsing), along with token usage.
 */

export const PROMPT_PLACEHOLDER = "[*job description*]";

export const EXTRACTION_PROMPT_RU =
  "Извлеки максимальное количество важных навыков из этого описания вакансии, " +
  "описанных в 3-4 словах каждый без дополнительных пояснений, сформулированных " +
  "формально, и обязательно включи цифровые навыки, если они есть. Не включай " +
  "опыт, требования к образованию или условия работы. Предоставь список навыков, " +
  "разделённых точкой с запятой. Текст описания вакансии: [*job description*].";

export interface ChatResult {
  content: string;
  promptTokens: number;
  completionTokens: number;
}

export type ChatFn = (prompt: string) => Promise<ChatResult>;

export interface LlmConfig {
  apiUrl: string;
  model: string;
  apiKeyEnv: string;
  maxTokens: number;
  timeoutMs: number;
}

export function renderPrompt(template: string, desc: string): string {
  if (!template.includes(PROMPT_PLACEHOLDER)) {
    throw new Error(`template is missing the placeholder ${PROMPT_PLACEHOLDER}`);
  }
  return template.split(PROMPT_PLACEHOLDER).join(desc);
}

/** Split a semicolon list: client-side convenience only, the harness re-parses. */
export function splitSkills(raw: string): string[] {
  return raw
    .split(";")
    .map((part) => part.trim().replace(/\.+$/, "").trim())
    .filter((part) => part.length > 0);
}

export function chatApiCaller(config: LlmConfig): ChatFn {
  const apiKey = process.env[config.apiKeyEnv];
  if (!apiKey) {
    throw new Error(`environment variable ${config.apiKeyEnv} is not set`);
  }
  return async (prompt: string) => {
    const controller = new AbortController();
    const timer = setTimeout(() => controller.abort(), config.timeoutMs);
    try {
      const response = await fetch(`${config.apiUrl}/chat/completions`, {
        method: "POST",
        headers: {
          "Content-Type": "application/json",
          // the key is used but never logged
          Authorization: `Bearer ${apiKey}`,
        },
        body: JSON.stringify({
          model: config.model,
          messages: [{ role: "user", content: prompt }],
          max_tokens: config.maxTokens,
        }),
        signal: controller.signal,
      });
      if (!response.ok) {
        throw new Error(`chat API returned ${response.status}`);
      }
      const body = (await response.json()) as {
        choices: Array<{ message: { content: string } }>;
        usage?: { prompt_tokens?: number; completion_tokens?: number };
      };
      return {
        content: body.choices[0]?.message?.content ?? "",
        promptTokens: body.usage?.prompt_tokens ?? 0,
        completionTokens: body.usage?.completion_tokens ?? 0,
      };
    } finally {
      clearTimeout(timer);
    }
  };
}

/** Deterministic offline stand-in for the chat API; fixed or derived usage. */
export function mockCaller(tokens?: { in: number; out: number }): ChatFn {
  return async (prompt: string) => {
    const content = "взаимодействие с клиентами; ведение отчётности; работа в команде.";
    return {
      content,
      promptTokens: tokens ? tokens.in : Math.ceil(prompt.length / 4),
      completionTokens: tokens ? tokens.out : Math.ceil(content.length / 4),
    };
  };
}
