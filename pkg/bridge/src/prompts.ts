/** Prompt assets: loaded verbatim from disk, placeholders filled at dispatch.
 *
 * Templates are never mutated at runtime; rendering only substitutes the
 * {question}, {gold}, and {answer} placeholders.
 */

import { readFileSync } from "node:fs";
import path from "node:path";

export const PROMPT_NAMES = ["generation", "grading", "stop", "answer"] as const;
export type PromptName = (typeof PROMPT_NAMES)[number];

export type PromptAssets = Record<PromptName, string>;

export function promptDir(): string {
  // src/ and dist/ both sit one level below the package root
  return path.resolve(__dirname, "..", "assets", "prompts");
}

export function loadPromptAssets(dir: string = promptDir()): PromptAssets {
  const assets = {} as PromptAssets;
  for (const name of PROMPT_NAMES) {
    assets[name] = readFileSync(path.join(dir, `${name}.txt`), "utf-8");
  }
  return assets;
}

const PLACEHOLDER = /\{(question|gold|answer)\}/g;

export function renderPrompt(
  template: string,
  values: { question?: string; gold?: string; answer?: string },
): string {
  const rendered = template.replace(PLACEHOLDER, (whole, key) => {
    const value = values[key as keyof typeof values];
    if (value === undefined) {
      throw new Error(`unresolved prompt placeholder {${key}}`);
    }
    return value;
  });
  return rendered;
}
