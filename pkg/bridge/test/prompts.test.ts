import { readFileSync } from "node:fs";
import path from "node:path";

import { describe, expect, it } from "vitest";

import { loadPromptAssets, promptDir, PROMPT_NAMES, renderPrompt } from "../src/prompts";

describe("prompt assets", () => {
  it("ships all four templates", () => {
    const assets = loadPromptAssets();
    expect(Object.keys(assets).sort()).toEqual([...PROMPT_NAMES].sort());
    for (const name of PROMPT_NAMES) {
      expect(assets[name].length).toBeGreaterThan(0);
    }
  });

  it("loads templates byte-identical to the shipped files", () => {
    const assets = loadPromptAssets();
    for (const name of PROMPT_NAMES) {
      const raw = readFileSync(path.join(promptDir(), `${name}.txt`), "utf-8");
      expect(assets[name]).toBe(raw);
    }
  });

  it("resolves every placeholder before dispatch", () => {
    const assets = loadPromptAssets();
    const values = { question: "Q?", gold: "G", answer: "A" };
    for (const name of PROMPT_NAMES) {
      const rendered = renderPrompt(assets[name], values);
      expect(rendered).not.toMatch(/\{(question|gold|answer)\}/);
    }
    expect(renderPrompt(assets.grading, values)).toContain("Question: Q?");
    expect(renderPrompt(assets.grading, values)).toContain("Answer: G");
    expect(renderPrompt(assets.grading, values)).toContain("Response: A");
  });

  it("fails loudly on unresolved placeholders", () => {
    expect(() => renderPrompt("{question} {gold}", { question: "x" }))
      .toThrowError(/unresolved prompt placeholder \{gold\}/);
  });

  it("keeps the grading contract line verbatim", () => {
    const assets = loadPromptAssets();
    expect(assets.grading).toContain(
      "exactly two fractions, separated by a comma",
    );
    expect(assets.stop).toContain('Respond only with "yes" or "no"');
  });
});
