/**
 * Command line for the toy generator: pretrain, finetune, generate.
 * Data goes to stdout as JSON; progress and diagnostics go to stderr.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { loadMerges } from "./bpe.ts";
import { readCorpus, writeCorpus } from "./corpus.ts";
import { DEFAULT_GENERATION, GenerationConfig, generateCorpus } from "./generate.ts";
import { DEFAULT_CONFIG, ModelConfig } from "./model.ts";
import { finetune, loadCheckpoint, pretrain, saveCheckpoint } from "./train.ts";

function parseArgs(argv: string[]): { command: string; options: Map<string, string>; flags: Set<string> } {
  const [command, ...rest] = argv;
  const options = new Map<string, string>();
  const flags = new Set<string>();
  for (let i = 0; i < rest.length; i++) {
    const arg = rest[i];
    if (!arg.startsWith("--")) throw new Error(`unexpected argument ${arg}`);
    const name = arg.slice(2);
    if (i + 1 < rest.length && !rest[i + 1].startsWith("--")) {
      options.set(name, rest[++i]);
    } else {
      flags.add(name);
    }
  }
  return { command: command ?? "", options, flags };
}

function loadModelConfig(path: string | undefined): ModelConfig {
  if (!path) return { ...DEFAULT_CONFIG };
  const overrides = JSON.parse(readFileSync(path, "utf-8"));
  return { ...DEFAULT_CONFIG, ...overrides };
}

function require_(options: Map<string, string>, name: string): string {
  const value = options.get(name);
  if (!value) throw new Error(`missing required option --${name}`);
  return value;
}

function main(argv: string[]): number {
  const { command, options, flags } = parseArgs(argv);
  if (command === "pretrain") {
    const config = loadModelConfig(options.get("config"));
    if (options.has("seed")) config.seed = Number(options.get("seed"));
    const general = readCorpus(require_(options, "general"));
    const bpe = options.has("bpe") ? loadMerges(options.get("bpe")!) : undefined;
    const epochs = options.has("epochs") ? Number(options.get("epochs")) : undefined;
    const checkpoint = pretrain(general, config, { bpe, epochs });
    const out = require_(options, "out");
    saveCheckpoint(checkpoint, out);
    console.log(JSON.stringify({
      out,
      parameters: checkpoint.model.parameterCount(),
      vocab: checkpoint.tokenizer.vocabSize,
      history: checkpoint.history,
    }));
    return 0;
  }
  if (command === "finetune") {
    const base = loadCheckpoint(require_(options, "checkpoint"));
    const inDomain = readCorpus(require_(options, "in-domain"));
    const epochs = options.has("epochs") ? Number(options.get("epochs")) : undefined;
    const bpe = options.has("bpe") ? loadMerges(options.get("bpe")!) : undefined;
    const result = finetune(base, inDomain, {
      epochs,
      bpe,
      randomInit: flags.has("random-init"),
    });
    const out = require_(options, "out");
    saveCheckpoint(result.checkpoint, out);
    console.log(JSON.stringify({
      out,
      heldout_loss_before: result.heldoutBefore,
      heldout_loss_after: result.heldoutAfter,
    }));
    return 0;
  }
  if (command === "generate") {
    const checkpoint = loadCheckpoint(require_(options, "checkpoint"));
    const prompts = readCorpus(require_(options, "prompts"));
    const overrides = options.has("gen-config")
      ? JSON.parse(readFileSync(options.get("gen-config")!, "utf-8"))
      : {};
    const config: GenerationConfig = {
      ...DEFAULT_GENERATION,
      target_token_count: Number(options.get("target-tokens") ?? overrides.target_token_count),
      ...overrides,
    };
    if (options.has("seed")) config.seed = Number(options.get("seed"));
    const sentences = generateCorpus(checkpoint, prompts, config);
    const out = require_(options, "out");
    writeCorpus(sentences, out);
    writeFileSync(
      out + ".manifest.json",
      JSON.stringify({ command: "generate", config, sentences: sentences.length }, null, 2) + "\n",
      "utf-8",
    );
    console.log(JSON.stringify({
      out,
      sentences: sentences.length,
      tokens: sentences.reduce((s, x) => s + x.length, 0),
    }));
    return 0;
  }
  console.error("usage: cli.ts pretrain|finetune|generate [--options]");
  return 2;
}

try {
  process.exit(main(process.argv.slice(2)));
} catch (err) {
  console.error(`error: ${(err as Error).message}`);
  process.exit(1);
}
