import { z } from "zod";

export const PROTOCOL = "skillbench/1";

export const HandshakeSchema = z.object({
  protocol: z.literal(PROTOCOL),
  name: z.string().min(1),
  kind: z.enum(["ner", "llm"]),
});

export const RequestSchema = z.object({
  id: z.union([z.string(), z.number().int()]),
  title: z.string(),
  desc: z.string(),
});

export const ResponseSchema = z.object({
  id: z.union([z.string(), z.number().int()]),
  skills: z.array(z.string()),
  raw_output: z.string().optional(),
  latency_sec: z.number().nonnegative().optional(),
  tokens_in: z.number().int().nonnegative().optional(),
  tokens_out: z.number().int().nonnegative().optional(),
  error: z.string().optional(),
  retryable: z.boolean().optional(),
});

export type Handshake = z.infer<typeof HandshakeSchema>;
export type ExtractionRequest = z.infer<typeof RequestSchema>;
export type ExtractionResponse = z.infer<typeof ResponseSchema>;

export function handshakeLine(name: string, kind: "ner" | "llm"): string {
  const handshake: Handshake = { protocol: PROTOCOL, name, kind };
  return JSON.stringify(handshake);
}
