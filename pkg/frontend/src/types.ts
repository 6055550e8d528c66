// Payload shapes of the elicitation service API.

export type Choice = 'first' | 'second';
export type FeatureChoice = 'first' | 'second' | 'skip';

export interface AnswerKinds {
  example: boolean;
  features: 'all' | 'optional' | 'none';
  description: boolean;
}

export interface SessionInfo {
  id: string;
  condition: string;
  mode: string;
  domain: string;
  answer_kinds: AnswerKinds;
  gt_theta?: number[];
}

export interface QueryPayload {
  query_id: string;
  features: string[];
  options: { a: Record<string, string>; b: Record<string, string> };
  option_values: { a: number[]; b: number[] };
  answer_kinds: AnswerKinds;
}

export interface FeatureRewardRow {
  feature: string;
  values?: Record<string, number>;
  weight?: number;
}

export interface ModelSnapshot {
  combiner: number[];
  feature_rewards: FeatureRewardRow[];
  gt_best_probability: number | null;
  n_records: number;
  n_synthesized: number;
  n_responses: number;
}

export interface ResponseBody {
  query_id: string;
  example_choice: Choice;
  feature_choices?: Record<string, FeatureChoice>;
  description?: string;
}

export interface CreateSessionOptions {
  domain?: string;
  condition?: string;
  mode?: string;
  seed?: number;
  relevant_count?: number;
}

export interface SessionExport {
  session: Record<string, unknown>;
  dataset_jsonl: string;
  checkpoint: Record<string, unknown>;
  responses: ResponseBody[];
}
