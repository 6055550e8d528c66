// Session flow, kept free of DOM concerns so it can be driven by the page or
// by tests. All displayed model numbers come from server snapshots; the
// controller never computes reward values locally.

import { ApiClient, ApiError } from './api';
import type {
  Choice,
  CreateSessionOptions,
  FeatureChoice,
  ModelSnapshot,
  QueryPayload,
  ResponseBody,
  SessionInfo,
} from './types';

export interface FormAnswers {
  example: Choice | null;
  features: Record<string, FeatureChoice>;
  description: string;
}

export function emptyForm(): FormAnswers {
  return { example: null, features: {}, description: '' };
}

export interface HistoryEntry {
  query_id: string;
  snapshot: ModelSnapshot;
}

export interface UiSessionState {
  session: SessionInfo | null;
  query: QueryPayload | null;
  snapshot: ModelSnapshot | null;
  history: HistoryEntry[];
  busy: boolean;
  error: string | null;
}

/** Names of the required answers the form is still missing. */
export function missingFields(query: QueryPayload, form: FormAnswers): string[] {
  const missing: string[] = [];
  if (form.example === null) {
    missing.push('example choice');
  }
  if (query.answer_kinds.features === 'all') {
    for (const name of query.features) {
      if (!(name in form.features)) {
        missing.push(`feature: ${name}`);
      }
    }
  }
  if (query.answer_kinds.description && form.description.trim() === '') {
    missing.push('description');
  }
  return missing;
}

type Listener = (state: UiSessionState) => void;

export class SessionController {
  state: UiSessionState = {
    session: null,
    query: null,
    snapshot: null,
    history: [],
    busy: false,
    error: null,
  };

  private listeners: Listener[] = [];

  constructor(private readonly client: ApiClient) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<UiSessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  /** Accuracy series for the sparkline: starting snapshot, then one point per
   * response. Entries are null-free only in practice mode. */
  accuracySeries(): Array<number | null> {
    const initial = this.state.snapshot === null && this.state.history.length === 0
      ? []
      : [this.initialAccuracy];
    return initial.concat(
      this.state.history.map((h) => h.snapshot.gt_best_probability),
    );
  }

  private initialAccuracy: number | null = null;

  async start(options: CreateSessionOptions = {}): Promise<void> {
    this.update({ busy: true, error: null });
    try {
      const session = await this.client.createSession(options);
      const snapshot = await this.client.getModel(session.id);
      const query = await this.client.getQuery(session.id);
      this.initialAccuracy = snapshot.gt_best_probability;
      this.update({
        session,
        snapshot,
        query,
        history: [],
        busy: false,
        error: null,
      });
    } catch (err) {
      this.update({ busy: false, error: describe(err) });
      throw err;
    }
  }

  canSubmit(form: FormAnswers): boolean {
    return (
      !this.state.busy &&
      this.state.query !== null &&
      missingFields(this.state.query, form).length === 0
    );
  }

  /** Post the current answers; on success the new snapshot is recorded and
   * the next query fetched. Returns false when blocked (busy/invalid). */
  async submit(form: FormAnswers): Promise<boolean> {
    const { session, query } = this.state;
    if (session === null || query === null || !this.canSubmit(form)) {
      return false;
    }
    const body: ResponseBody = {
      query_id: query.query_id,
      example_choice: form.example as Choice,
    };
    if (query.answer_kinds.features !== 'none') {
      body.feature_choices = { ...form.features };
    }
    if (query.answer_kinds.description) {
      body.description = form.description;
    }
    this.update({ busy: true, error: null });
    try {
      const snapshot = await this.client.submitResponse(session.id, body);
      const history = this.state.history.concat([
        { query_id: query.query_id, snapshot },
      ]);
      const next = await this.client.getQuery(session.id);
      this.update({ snapshot, history, query: next, busy: false });
      return true;
    } catch (err) {
      // surface the server error verbatim; on a stale query refetch it
      const error = describe(err);
      let next = this.state.query;
      if (err instanceof ApiError && err.status === 409) {
        try {
          next = await this.client.getQuery(session.id);
        } catch {
          // keep the old query; the error banner already tells the story
        }
      }
      this.update({ busy: false, error, query: next });
      return false;
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.code}: ${err.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}
