// Per-stage parameter forms.
//
// The form schema mirrors the server's stage parameters, and the bounds
// here replicate the server's checks so bad values are caught before a
// request goes out: strength in [0, 1], steps >= 1, guidance >= 0, and
// the face stage only accepts upscale 1, 2 or 4. Server validation still
// runs; this is a convenience, not the gate.

import type { StageName, StageParams, BackendInfo } from "./api.js";

export interface FieldSpec {
  key: keyof StageParams;
  label: string;
  kind: "number" | "integer" | "text";
  min?: number;
  max?: number;
  allowed?: number[];
}

export interface StageFormSchema {
  stage: StageName;
  maskEnabled: boolean;
  fields: FieldSpec[];
}

const COMMON_FIELDS: FieldSpec[] = [
  { key: "strength", label: "Strength", kind: "number", min: 0, max: 1 },
  { key: "steps", label: "Steps", kind: "integer", min: 1 },
  { key: "guidance", label: "Guidance", kind: "number", min: 0 },
  { key: "prompt", label: "Prompt", kind: "text" },
  { key: "checkpoint", label: "Checkpoint", kind: "text" },
  { key: "seed", label: "Seed", kind: "integer" },
];

export function stageFormSchema(stage: StageName): StageFormSchema {
  const fields = [...COMMON_FIELDS];
  if (stage === "face") {
    fields.splice(5, 0, { key: "upscale", label: "Upscale", kind: "integer", allowed: [1, 2, 4] });
  }
  return { stage, maskEnabled: stage === "damage", fields };
}

export interface FieldError {
  key: string;
  message: string;
}

export function validateParams(stage: StageName, params: StageParams): FieldError[] {
  const errors: FieldError[] = [];
  const schema = stageFormSchema(stage);
  for (const field of schema.fields) {
    const value = params[field.key];
    if (field.kind === "text") continue;
    if (typeof value !== "number" || Number.isNaN(value)) {
      errors.push({ key: field.key, message: `${field.label} must be a number` });
      continue;
    }
    if (field.kind === "integer" && !Number.isInteger(value)) {
      errors.push({ key: field.key, message: `${field.label} must be an integer` });
    }
    if (field.min !== undefined && value < field.min) {
      errors.push({ key: field.key, message: `${field.label} must be >= ${field.min}` });
    }
    if (field.max !== undefined && value > field.max) {
      errors.push({ key: field.key, message: `${field.label} must be <= ${field.max}` });
    }
    if (field.allowed !== undefined && !field.allowed.includes(value)) {
      errors.push({ key: field.key, message: `${field.label} must be one of ${field.allowed.join(", ")}` });
    }
  }
  if (params.backend_id === "") {
    errors.push({ key: "backend_id", message: "pick a backend" });
  }
  return errors;
}

export function backendChoices(catalog: BackendInfo[], stage: StageName): BackendInfo[] {
  return catalog.filter((b) => b.stage === stage);
}

export function defaultParamsFor(stage: StageName, catalog: BackendInfo[]): StageParams {
  const choices = backendChoices(catalog, stage);
  const reference = choices.find((b) => b.kind === "reference") ?? choices[0];
  return {
    backend_id: reference ? reference.backend_id : "",
    strength: 1.0,
    steps: 30,
    guidance: 1.0,
    prompt: "",
    checkpoint: "",
    upscale: 1,
    seed: 0,
    extras: {},
  };
}
