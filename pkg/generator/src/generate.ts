/**
 * Prefix-prompted temperature sampling into the shared corpus text format.
 * Prefixes are drawn uniformly from the prompt corpus (length 1..7 words by
 * default), the temperature is drawn uniformly per sentence (1.0..1.5 by
 * default), and sampling stops at `</s>` or at the per-sentence word cap.
 */

import type { Sentence } from "./corpus.ts";
import { Rng } from "./rng.ts";
import type { Checkpoint } from "./train.ts";

export interface GenerationConfig {
  target_token_count: number;
  prefix_len_min: number;
  prefix_len_max: number;
  temperature_min: number;
  temperature_max: number;
  max_tokens_per_sentence: number;
  seed: number;
}

export const DEFAULT_GENERATION: Omit<GenerationConfig, "target_token_count"> = {
  prefix_len_min: 1,
  prefix_len_max: 7,
  temperature_min: 1.0,
  temperature_max: 1.5,
  max_tokens_per_sentence: 64,
  seed: 0,
};

export function validateGenerationConfig(config: GenerationConfig): void {
  if (!(config.prefix_len_min >= 1 && config.prefix_len_min <= config.prefix_len_max)) {
    throw new Error("need 1 <= prefix_len_min <= prefix_len_max");
  }
  if (!(config.temperature_min > 0 && config.temperature_min <= config.temperature_max)) {
    throw new Error("need 0 < temperature_min <= temperature_max");
  }
  if (!(config.target_token_count > 0)) {
    throw new Error("target_token_count must be positive");
  }
}

function samplePrefix(source: Sentence[], rng: Rng, minLen: number, maxLen: number): string[] {
  const sent = source[rng.int(source.length)];
  const hi = Math.min(maxLen, sent.length);
  const lo = Math.min(minLen, sent.length);
  const length = lo + rng.int(hi - lo + 1);
  return sent.slice(0, length);
}

function sampleId(logits: Float64Array, temperature: number, banned: number, rng: Rng): number {
  let max = -Infinity;
  for (let i = 0; i < logits.length; i++) {
    if (i !== banned) max = Math.max(max, logits[i]);
  }
  const probs = new Float64Array(logits.length);
  let z = 0;
  for (let i = 0; i < logits.length; i++) {
    if (i === banned) continue;
    probs[i] = Math.exp((logits[i] - max) / temperature);
    z += probs[i];
  }
  let r = rng.next() * z;
  for (let i = 0; i < probs.length; i++) {
    r -= probs[i];
    if (r <= 0) return i;
  }
  return probs.length - 1;
}

export function sampleSentence(
  checkpoint: Checkpoint,
  prefix: string[],
  temperature: number,
  maxWords: number,
  rng: Rng,
): string[] {
  const { model, tokenizer } = checkpoint;
  const ctx = model.config.context_len;
  let ids: number[] = [];
  for (const w of prefix.slice(0, maxWords)) ids.push(...tokenizer.encodeWordIds(w));
  const sampled: number[] = [...ids];
  // Cap the subword loop too, so runaway continuations cannot spin forever.
  const maxSteps = maxWords * 8;
  for (let step = 0; step < maxSteps; step++) {
    const windowIds = Int32Array.from(sampled.slice(-ctx));
    const logits = model.forward(windowIds);
    const lastRow = logits.data.subarray(
      (windowIds.length - 1) * tokenizer.vocabSize,
      windowIds.length * tokenizer.vocabSize,
    ) as Float64Array;
    const next = sampleId(lastRow, temperature, tokenizer.unkId, rng);
    if (next === tokenizer.eosId) break;
    sampled.push(next);
    if (tokenizer.decodeToWords(sampled).length >= maxWords) break;
  }
  return tokenizer.decodeToWords(sampled).slice(0, maxWords);
}

export function generateCorpus(
  checkpoint: Checkpoint,
  prompts: Sentence[],
  config: GenerationConfig,
): Sentence[] {
  validateGenerationConfig(config);
  if (prompts.length === 0) throw new Error("prompt source corpus is empty");
  const rng = new Rng(config.seed);
  const sentences: Sentence[] = [];
  let emitted = 0;
  while (emitted < config.target_token_count) {
    const prefix = samplePrefix(prompts, rng, config.prefix_len_min, config.prefix_len_max);
    const temperature = rng.uniform(config.temperature_min, config.temperature_max);
    const sent = sampleSentence(
      checkpoint, prefix, temperature, config.max_tokens_per_sentence, rng,
    );
    if (sent.length === 0) continue;
    sentences.push(sent);
    emitted += sent.length;
  }
  return sentences;
}
