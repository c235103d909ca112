/**
 * Decoder-only transformer at toy scale.
 *
 * Architecture follows the usual GPT conventions: learned token and
 * position embeddings, pre-norm blocks of causal multi-head self-attention
 * and a feed-forward layer whose first projection is four times the
 * embedding width, dropout on embeddings, attention weights and residuals,
 * and a final layer norm before the untied output head.
 */

import { Rng } from "./rng.ts";
import {
  Tensor,
  add,
  addBias,
  backward,
  causalSoftmax,
  concatCols,
  dropout,
  gatherRows,
  gelu,
  layerNorm,
  matmul,
  matmulTransB,
  scale,
  sliceCols,
  softmaxCrossEntropy,
} from "./tensor.ts";

export interface ModelConfig {
  layers: number;
  heads: number;
  embedding_dim: number;
  context_len: number;
  dropout: number;
  learning_rate: number;
  batch_size: number;
  pretrain_epochs: number;
  finetune_epochs: number;
  bpe_inventory: number;
  seed: number;
}

export const DEFAULT_CONFIG: ModelConfig = {
  layers: 4,
  heads: 4,
  embedding_dim: 128,
  context_len: 128,
  dropout: 0.1,
  learning_rate: 1e-3,
  batch_size: 8,
  pretrain_epochs: 4,
  finetune_epochs: 4,
  bpe_inventory: 500,
  seed: 0,
};

export function validateConfig(config: ModelConfig): void {
  if (config.embedding_dim % config.heads !== 0) {
    throw new Error(
      `embedding_dim ${config.embedding_dim} not divisible by heads ${config.heads}`,
    );
  }
  for (const key of ["layers", "heads", "embedding_dim", "context_len"] as const) {
    if (!(config[key] >= 1)) throw new Error(`${key} must be >= 1`);
  }
  if (!(config.dropout >= 0 && config.dropout < 1)) {
    throw new Error("dropout must be in [0, 1)");
  }
}

interface Block {
  ln1g: Tensor;
  ln1b: Tensor;
  wq: Tensor;
  wk: Tensor;
  wv: Tensor;
  wo: Tensor;
  bo: Tensor;
  ln2g: Tensor;
  ln2b: Tensor;
  w1: Tensor;
  b1: Tensor;
  w2: Tensor;
  b2: Tensor;
}

export class GptModel {
  config: ModelConfig;
  vocabSize: number;
  tokEmb: Tensor;
  posEmb: Tensor;
  blocks: Block[];
  lnFg: Tensor;
  lnFb: Tensor;
  head: Tensor;

  constructor(config: ModelConfig, vocabSize: number, initRng?: Rng) {
    validateConfig(config);
    this.config = config;
    this.vocabSize = vocabSize;
    const d = config.embedding_dim;
    const ffn = 4 * d; // first feed-forward layer is 4x the bottleneck width
    const rng = initRng ?? new Rng(config.seed);
    const init = (std: number) => () => rng.gauss(0, std);
    const zeros = () => 0;

    this.tokEmb = Tensor.param(vocabSize, d, init(0.02));
    this.posEmb = Tensor.param(config.context_len, d, init(0.02));
    this.blocks = [];
    for (let layer = 0; layer < config.layers; layer++) {
      this.blocks.push({
        ln1g: Tensor.param(1, d, () => 1),
        ln1b: Tensor.param(1, d, zeros),
        wq: Tensor.param(d, d, init(0.02)),
        wk: Tensor.param(d, d, init(0.02)),
        wv: Tensor.param(d, d, init(0.02)),
        wo: Tensor.param(d, d, init(0.02 / Math.sqrt(2 * config.layers))),
        bo: Tensor.param(1, d, zeros),
        ln2g: Tensor.param(1, d, () => 1),
        ln2b: Tensor.param(1, d, zeros),
        w1: Tensor.param(d, ffn, init(0.02)),
        b1: Tensor.param(1, ffn, zeros),
        w2: Tensor.param(ffn, d, init(0.02 / Math.sqrt(2 * config.layers))),
        b2: Tensor.param(1, d, zeros),
      });
    }
    this.lnFg = Tensor.param(1, d, () => 1);
    this.lnFb = Tensor.param(1, d, zeros);
    this.head = Tensor.param(d, vocabSize, init(0.02));
  }

  parameters(): Tensor[] {
    const params = [this.tokEmb, this.posEmb, this.lnFg, this.lnFb, this.head];
    for (const b of this.blocks) {
      params.push(b.ln1g, b.ln1b, b.wq, b.wk, b.wv, b.wo, b.bo,
                  b.ln2g, b.ln2b, b.w1, b.b1, b.w2, b.b2);
    }
    return params;
  }

  parameterCount(): number {
    return this.parameters().reduce((s, p) => s + p.data.length, 0);
  }

  /** Forward pass over one sequence; returns last-layer logits. */
  forward(ids: Int32Array, dropoutRate = 0, rand: () => number = Math.random): Tensor {
    const { heads, embedding_dim: d } = this.config;
    const headDim = d / heads;
    const posIds = new Int32Array(ids.length);
    for (let i = 0; i < ids.length; i++) posIds[i] = i;

    let x = add(gatherRows(this.tokEmb, ids), gatherRows(this.posEmb, posIds));
    x = dropout(x, dropoutRate, rand);
    for (const b of this.blocks) {
      const normed = layerNorm(x, b.ln1g, b.ln1b);
      const q = matmul(normed, b.wq);
      const k = matmul(normed, b.wk);
      const v = matmul(normed, b.wv);
      const headsOut: Tensor[] = [];
      for (let h = 0; h < heads; h++) {
        const qh = sliceCols(q, h * headDim, headDim);
        const kh = sliceCols(k, h * headDim, headDim);
        const vh = sliceCols(v, h * headDim, headDim);
        const att = causalSoftmax(scale(matmulTransB(qh, kh), 1 / Math.sqrt(headDim)));
        headsOut.push(matmul(dropout(att, dropoutRate, rand), vh));
      }
      const attnOut = addBias(matmul(concatCols(headsOut), b.wo), b.bo);
      x = add(x, dropout(attnOut, dropoutRate, rand));
      const normed2 = layerNorm(x, b.ln2g, b.ln2b);
      const ffn = addBias(
        matmul(gelu(addBias(matmul(normed2, b.w1), b.b1)), b.w2),
        b.b2,
      );
      x = add(x, dropout(ffn, dropoutRate, rand));
    }
    return matmul(layerNorm(x, this.lnFg, this.lnFb), this.head);
  }

  /** Mean next-token cross-entropy over a (len+1)-token window. */
  loss(window: Int32Array, dropoutRate = 0, rand: () => number = Math.random): Tensor {
    const inputs = window.subarray(0, window.length - 1);
    const targets = window.subarray(1) as Int32Array;
    const logits = this.forward(inputs as Int32Array, dropoutRate, rand);
    return softmaxCrossEntropy(logits, targets);
  }
}

export { backward };
