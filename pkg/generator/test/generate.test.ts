import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { readCorpus, writeCorpus } from "../src/corpus.ts";
import { DEFAULT_GENERATION, generateCorpus, validateGenerationConfig } from "../src/generate.ts";
import { pretrain } from "../src/train.ts";

const CONFIG = {
  layers: 2,
  heads: 2,
  embedding_dim: 32,
  context_len: 32,
  dropout: 0.1,
  learning_rate: 3e-3,
  batch_size: 8,
  pretrain_epochs: 1,
  finetune_epochs: 1,
  bpe_inventory: 80,
  seed: 7,
};

const prompts = readCorpus(join(import.meta.dirname, "../../data/miniature/train.txt"))
  .slice(0, 400);
const checkpoint = pretrain(prompts, CONFIG, { quiet: true });

describe("generation", () => {
  it("defaults encode the prefix and temperature controls", () => {
    expect(DEFAULT_GENERATION.prefix_len_min).toBe(1);
    expect(DEFAULT_GENERATION.prefix_len_max).toBe(7);
    expect(DEFAULT_GENERATION.temperature_min).toBe(1.0);
    expect(DEFAULT_GENERATION.temperature_max).toBe(1.5);
  });

  it("validates its config", () => {
    expect(() =>
      validateGenerationConfig({ ...DEFAULT_GENERATION, target_token_count: 0 }),
    ).toThrow(/target_token_count/);
    expect(() =>
      validateGenerationConfig({
        ...DEFAULT_GENERATION,
        target_token_count: 10,
        temperature_min: 0,
      }),
    ).toThrow(/temperature/);
  });

  it("reaches the token target and honors the sentence cap", () => {
    const out = generateCorpus(checkpoint, prompts, {
      ...DEFAULT_GENERATION,
      target_token_count: 250,
      max_tokens_per_sentence: 12,
      seed: 5,
    });
    const tokens = out.reduce((s, x) => s + x.length, 0);
    expect(tokens).toBeGreaterThanOrEqual(250);
    for (const sent of out) expect(sent.length).toBeLessThanOrEqual(12);
  });

  it("emits text that round-trips through the shared corpus format", () => {
    const out = generateCorpus(checkpoint, prompts, {
      ...DEFAULT_GENERATION,
      target_token_count: 200,
      seed: 6,
    });
    for (const sent of out) {
      for (const tok of sent) {
        expect(tok.startsWith("+")).toBe(false);
        expect(["<s>", "</s>", "<unk>"]).not.toContain(tok);
      }
    }
    const dir = mkdtempSync(join(tmpdir(), "gen-"));
    const path = join(dir, "generated.txt");
    writeCorpus(out, path);
    const reread = readCorpus(path);
    expect(reread).toEqual(out);
    expect(readFileSync(path, "utf-8").endsWith("\n")).toBe(true);
  });

  it("is reproducible for a fixed seed", () => {
    const config = { ...DEFAULT_GENERATION, target_token_count: 300, seed: 21 };
    const a = generateCorpus(checkpoint, prompts, config);
    const b = generateCorpus(checkpoint, prompts, config);
    expect(a.slice(0, 100)).toEqual(b.slice(0, 100));
  });
});
