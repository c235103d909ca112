/**
 * Training loops for the pretrain -> fine-tune recipe: Adam with a linear
 * learning-rate decay, per-epoch loss logging, JSON checkpoints carrying
 * the config, the tokenizer and every weight, and a held-out in-domain
 * slice for the fine-tuning before/after comparison.
 */

import { readFileSync, writeFileSync } from "node:fs";
import type { BpeModel } from "./bpe.ts";
import { trainBpe } from "./bpe.ts";
import type { Sentence } from "./corpus.ts";
import { GptModel, ModelConfig, backward, validateConfig } from "./model.ts";
import { Rng } from "./rng.ts";
import { Tokenizer } from "./tokenizer.ts";

export interface Checkpoint {
  model: GptModel;
  tokenizer: Tokenizer;
  config: ModelConfig;
  history: { phase: string; epoch: number; loss: number }[];
}

class Adam {
  private m: Float64Array[];
  private v: Float64Array[];
  private t = 0;

  constructor(private params: { data: Float64Array; grad: Float64Array | null }[]) {
    this.m = params.map((p) => new Float64Array(p.data.length));
    this.v = params.map((p) => new Float64Array(p.data.length));
  }

  step(lr: number, beta1 = 0.9, beta2 = 0.999, eps = 1e-8): void {
    this.t += 1;
    const c1 = 1 - Math.pow(beta1, this.t);
    const c2 = 1 - Math.pow(beta2, this.t);
    this.params.forEach((p, idx) => {
      const g = p.grad;
      if (!g) return;
      const m = this.m[idx];
      const v = this.v[idx];
      for (let i = 0; i < g.length; i++) {
        m[i] = beta1 * m[i] + (1 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1 - beta2) * g[i] * g[i];
        p.data[i] -= (lr * (m[i] / c1)) / (Math.sqrt(v[i] / c2) + eps);
        g[i] = 0;
      }
    });
  }
}

function trainEpochs(
  model: GptModel,
  stream: Int32Array,
  epochs: number,
  rng: Rng,
  log: (epoch: number, loss: number) => void,
): number[] {
  const { context_len: ctx, batch_size: batch, dropout: drop, learning_rate: lr0 } =
    model.config;
  const window = ctx + 1;
  if (stream.length < window + 1) throw new Error("training stream shorter than one window");
  const stepsPerEpoch = Math.max(1, Math.floor(stream.length / (batch * ctx)));
  const totalSteps = stepsPerEpoch * epochs;
  const optimizer = new Adam(model.parameters());
  const losses: number[] = [];
  let step = 0;
  const rand = () => rng.next();
  for (let epoch = 1; epoch <= epochs; epoch++) {
    let epochLoss = 0;
    for (let s = 0; s < stepsPerEpoch; s++) {
      let batchLoss = 0;
      for (let bIdx = 0; bIdx < batch; bIdx++) {
        const start = rng.int(stream.length - window);
        const loss = model.loss(stream.subarray(start, start + window) as Int32Array,
                                drop, rand);
        backward(loss);
        batchLoss += loss.data[0];
      }
      // Gradients accumulate over the batch; scale via the learning rate.
      const lr = (lr0 * (1 - step / totalSteps)) / batch;
      optimizer.step(lr);
      step += 1;
      epochLoss += batchLoss / batch;
    }
    const mean = epochLoss / stepsPerEpoch;
    losses.push(mean);
    log(epoch, mean);
  }
  return losses;
}

/** Mean next-token loss over sequential windows, without dropout. */
export function evaluateLoss(model: GptModel, stream: Int32Array): number {
  const window = model.config.context_len + 1;
  let total = 0;
  let count = 0;
  for (let start = 0; start + window <= stream.length; start += model.config.context_len) {
    const loss = model.loss(stream.subarray(start, start + window) as Int32Array);
    total += loss.data[0];
    count += 1;
  }
  if (count === 0) throw new Error("held-out stream shorter than one window");
  return total / count;
}

export function pretrain(
  general: Sentence[],
  config: ModelConfig,
  options: { bpe?: BpeModel; epochs?: number; quiet?: boolean } = {},
): Checkpoint {
  validateConfig(config);
  const epochs = options.epochs ?? config.pretrain_epochs;
  const bpe = options.bpe ?? trainBpe(general, config.bpe_inventory);
  const tokenizer = new Tokenizer(bpe);
  const model = new GptModel(config, tokenizer.vocabSize, new Rng(config.seed));
  const history: Checkpoint["history"] = [];
  if (epochs > 0) {
    const stream = tokenizer.encodeCorpus(general);
    const losses = trainEpochs(model, stream, epochs, new Rng(config.seed + 1), (e, l) => {
      if (!options.quiet) console.error(`pretrain epoch ${e}: loss ${l.toFixed(4)}`);
      history.push({ phase: "pretrain", epoch: e, loss: l });
    });
    if (losses.length >= 2 && losses[losses.length - 1] >= losses[0]) {
      throw new Error(
        `training failure: pretrain loss did not decrease (${losses[0].toFixed(4)} -> ` +
          `${losses[losses.length - 1].toFixed(4)})`,
      );
    }
  }
  return { model, tokenizer, config, history };
}

export function finetune(
  checkpoint: Checkpoint,
  inDomain: Sentence[],
  options: {
    epochs?: number;
    heldoutFraction?: number;
    randomInit?: boolean;
    bpe?: BpeModel;
    quiet?: boolean;
  } = {},
): { checkpoint: Checkpoint; heldoutBefore: number; heldoutAfter: number } {
  const config = checkpoint.config;
  const epochs = options.epochs ?? config.finetune_epochs;
  if (options.bpe && !sameBpe(options.bpe, checkpoint.tokenizer.bpe)) {
    throw new Error("tokenizer mismatch: merge file differs from the checkpoint's tokenizer");
  }
  let model = checkpoint.model;
  if (options.randomInit) {
    // The no-pretrain ablation: same config and tokenizer, fresh weights.
    model = new GptModel(config, checkpoint.tokenizer.vocabSize, new Rng(config.seed));
  }
  const holdout = Math.max(1, Math.floor(inDomain.length * (options.heldoutFraction ?? 0.05)));
  const trainSents = inDomain.slice(0, inDomain.length - holdout);
  const heldoutSents = inDomain.slice(inDomain.length - holdout);
  const trainStream = checkpoint.tokenizer.encodeCorpus(trainSents);
  const heldoutStream = checkpoint.tokenizer.encodeCorpus(heldoutSents);

  const before = evaluateLoss(model, heldoutStream);
  const history = [...checkpoint.history];
  if (epochs > 0) {
    trainEpochs(model, trainStream, epochs, new Rng(config.seed + 2), (e, l) => {
      if (!options.quiet) console.error(`finetune epoch ${e}: loss ${l.toFixed(4)}`);
      history.push({ phase: "finetune", epoch: e, loss: l });
    });
  }
  const after = epochs > 0 ? evaluateLoss(model, heldoutStream) : before;
  return {
    checkpoint: { model, tokenizer: checkpoint.tokenizer, config, history },
    heldoutBefore: before,
    heldoutAfter: after,
  };
}

function sameBpe(a: BpeModel, b: BpeModel): boolean {
  if (a.merges.length !== b.merges.length || a.alphabet.size !== b.alphabet.size) {
    return false;
  }
  for (let i = 0; i < a.merges.length; i++) {
    if (a.merges[i][0] !== b.merges[i][0] || a.merges[i][1] !== b.merges[i][1]) return false;
  }
  for (const ch of a.alphabet) if (!b.alphabet.has(ch)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization (internal format: JSON with base64 weights)

function encodeArray(data: Float64Array): string {
  return Buffer.from(data.buffer, data.byteOffset, data.byteLength).toString("base64");
}

function decodeArray(text: string, length: number): Float64Array {
  const buf = Buffer.from(text, "base64");
  const arr = new Float64Array(buf.buffer, buf.byteOffset, length);
  return Float64Array.from(arr);
}

export function saveCheckpoint(checkpoint: Checkpoint, path: string): void {
  const params = checkpoint.model.parameters();
  writeFileSync(
    path,
    JSON.stringify({
      format: "toygen-checkpoint v1",
      config: checkpoint.config,
      alphabet: [...checkpoint.tokenizer.bpe.alphabet].sort(),
      merges: checkpoint.tokenizer.bpe.merges,
      history: checkpoint.history,
      params: params.map((p) => ({
        rows: p.rows,
        cols: p.cols,
        data: encodeArray(p.data),
      })),
    }),
    "utf-8",
  );
}

export function loadCheckpoint(path: string): Checkpoint {
  const payload = JSON.parse(readFileSync(path, "utf-8"));
  if (payload.format !== "toygen-checkpoint v1") {
    throw new Error(`unrecognized checkpoint format in ${path}`);
  }
  const bpe: BpeModel = {
    alphabet: new Set(payload.alphabet as string[]),
    merges: (payload.merges as [string, string][]).map(([l, r]) => [l, r]),
  };
  const tokenizer = new Tokenizer(bpe);
  const model = new GptModel(payload.config, tokenizer.vocabSize, new Rng(payload.config.seed));
  const params = model.parameters();
  if (params.length !== payload.params.length) {
    throw new Error("checkpoint parameter count mismatch");
  }
  params.forEach((p, i) => {
    const saved = payload.params[i];
    if (saved.rows !== p.rows || saved.cols !== p.cols) {
      throw new Error("checkpoint parameter shape mismatch");
    }
    p.data = decodeArray(saved.data, p.rows * p.cols);
  });
  return { model, tokenizer, config: payload.config, history: payload.history ?? [] };
}
