/** Request/response schemas for the oracle wire protocol (one per endpoint). */

import { z } from "zod";

const point = z.object({ x: z.number().int(), y: z.number().int() }).strict();

export const requestSchemas = {
  semantic_scores: z
    .object({
      question: z.string(),
      image_ref: z.string().min(1),
      sample_points: z.array(point),
    })
    .strict(),
  classify_region: z
    .object({ question: z.string(), image_ref: z.string().min(1) })
    .strict(),
  should_stop: z
    .object({ question: z.string(), image_ref: z.string().min(1) })
    .strict(),
  answer: z
    .object({ question: z.string(), image_ref: z.string().min(1) })
    .strict(),
  grade: z
    .object({
      question: z.string(),
      gold: z.string(),
      answer: z.string(),
      image_ref: z.string().min(1),
    })
    .strict(),
} as const;

export type Endpoint = keyof typeof requestSchemas;

export const ENDPOINTS = Object.keys(requestSchemas) as Endpoint[];

export interface ErrorBody {
  error: { code: string; message: string };
}

export const errorBody = (code: string, message: string): ErrorBody => ({
  error: { code, message },
});
