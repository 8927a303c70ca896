#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "street/errors.hpp"
#include "street/metrics.hpp"
#include "street/model.hpp"
#include "street/records.hpp"
#include "street/rng.hpp"
#include "street/splits.hpp"
#include "street/synth.hpp"
#include "street/text.hpp"
#include "street/train.hpp"

#include "CLI11.hpp"

namespace street::cli {

namespace detail {

inline Charset load_charset_arg(const std::string& path_or_preset) {
  if (path_or_preset == "default") return default_charset();
  if (path_or_preset == "mini") return mini_charset();
  std::ifstream in(path_or_preset);
  if (!in) throw IoError("cannot open charset " + path_or_preset);
  return Charset::load(in);
}

inline std::string mini_word(Rng& rng) {
  static const char* kStarts[] = {"R", "L", "G"};
  static const char* kTails[] = {"in",  "is",  "al",  "ar",  "on", "as",  "ol",
                                 "or",  "an",  "il",  "es",  "ud", "ad",  "ine",
                                 "are", "ose", "ane", "ale", "ote", "une", "ade"};
  return std::string(kStarts[rng.uniform_int(3)]) + kTails[rng.uniform_int(21)];
}

inline std::string gen_name(Rng& rng, bool mini) {
  if (!mini) return random_street_name(rng);
  std::string n = "Rue " + mini_word(rng);
  if (rng.uniform() < 0.3) n += " " + mini_word(rng);
  return n;
}

struct SubsetArg {
  std::string name, path;
};

inline SubsetArg parse_subset(const std::string& s) {
  const size_t eq = s.find('=');
  if (eq == std::string::npos)
    throw CLI::ValidationError("--subset", "expected name=path, got " + s);
  return {s.substr(0, eq), s.substr(eq + 1)};
}

}  // namespace detail

// Single entry point behind the binary; tests call it in-process.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"street: multi-view street-name sign transcription toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value overlay; command-line flags win");

  // ---- gen ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate synthetic sign records");
  std::string gen_out, gen_charset = "default", gen_write_charset;
  int64_t gen_count = 0;
  uint64_t gen_seed = 1;
  int gen_tile = 150, gen_slots = 4, gen_min_views = 1, gen_max_views = 4, gen_max_scale = 4;
  double gen_lat0 = 42.0, gen_lat1 = 51.0, gen_lon0 = -4.0, gen_lon1 = 8.0;
  double gen_distractor = 0.3, gen_blur = 0.35;
  bool gen_no_geo = false;
  gen->add_option("--out", gen_out, "output records file")->required();
  gen->add_option("--count", gen_count, "number of examples")->required();
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--charset", gen_charset, "charset file, or preset name default|mini");
  gen->add_option("--write-charset", gen_write_charset, "also write the charset used");
  gen->add_option("--tile", gen_tile, "square view tile size in px");
  gen->add_option("--slots", gen_slots, "view slots per image");
  gen->add_option("--min-views", gen_min_views, "minimum real views");
  gen->add_option("--max-views", gen_max_views, "maximum real views");
  gen->add_option("--distractor-prob", gen_distractor, "irrelevant-text probability");
  gen->add_option("--blur-prob", gen_blur, "per-view blur probability");
  gen->add_option("--max-scale", gen_max_scale, "largest glyph scale");
  gen->add_option("--lat0", gen_lat0, "region south edge");
  gen->add_option("--lat1", gen_lat1, "region north edge");
  gen->add_option("--lon0", gen_lon0, "region west edge");
  gen->add_option("--lon1", gen_lon1, "region east edge");
  gen->add_flag("--no-geo", gen_no_geo, "omit lat/lon sidecar fields");

  // ---- split --------------------------------------------------------------
  auto* split = app.add_subcommand("split", "geographic split with dedup");
  std::string split_in, split_dir, split_fracs = "0.7,0.1,0.1,0.1";
  double split_wall = 100.0;
  split->add_option("--in", split_in, "input records file")->required();
  split->add_option("--out-dir", split_dir, "output directory")->required();
  split->add_option("--fractions", split_fracs, "comma list for train,validation,test,private_test");
  split->add_option("--wall-m", split_wall, "wall width in meters");

  // ---- stats --------------------------------------------------------------
  auto* stats = app.add_subcommand("stats", "word-content and OOV report");
  std::string stats_train;
  std::vector<std::string> stats_subsets;
  int64_t stats_freq = 100;
  stats->add_option("--train", stats_train, "train records file")->required();
  stats->add_option("--subset", stats_subsets, "name=path, repeatable");
  stats->add_option("--freq-threshold", stats_freq, "train frequency above which a word is stop");

  // ---- train --------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "CTC training");
  std::string tr_records, tr_charset, tr_preset = "full", tr_dir, tr_resume, tr_eval_records;
  int64_t tr_steps = 1000, tr_eval_every = 0;
  int tr_batch = 1;
  uint64_t tr_seed = 1, tr_model_seed = 1;
  double tr_lr = 2e-5, tr_clip = 0.0;
  bool tr_no_timestamps = false;
  tr->add_option("--records", tr_records, "training records")->required();
  tr->add_option("--charset", tr_charset, "charset file or preset name")->required();
  tr->add_option("--preset", tr_preset, "model preset full|mini");
  tr->add_option("--steps", tr_steps, "optimizer steps");
  tr->add_option("--batch", tr_batch, "gradient accumulation per step");
  tr->add_option("--lr", tr_lr, "Adam learning rate");
  tr->add_option("--seed", tr_seed, "training seed");
  tr->add_option("--model-seed", tr_model_seed, "initialization seed");
  tr->add_option("--eval-every", tr_eval_every, "evaluate and checkpoint every N steps");
  tr->add_option("--eval-records", tr_eval_records, "records for periodic eval (default: training set)");
  tr->add_option("--out-dir", tr_dir, "checkpoint directory");
  tr->add_option("--resume", tr_resume, "checkpoint to continue from");
  tr->add_option("--clip", tr_clip, "L2 gradient clip (0 = off)");
  tr->add_flag("--no-timestamps", tr_no_timestamps, "omit wall-clock from the log");

  // ---- eval ---------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "score a checkpoint on a record set");
  std::string ev_records, ev_ckpt, ev_charset, ev_dump;
  ev->add_option("--records", ev_records, "records file")->required();
  ev->add_option("--checkpoint", ev_ckpt, "model checkpoint")->required();
  ev->add_option("--charset", ev_charset, "charset file or preset name")->required();
  ev->add_option("--transcripts", ev_dump, "write per-example transcripts here");

  // ---- predict ------------------------------------------------------------
  auto* pr = app.add_subcommand("predict", "transcribe records or one raw image");
  std::string pr_ckpt, pr_charset, pr_records, pr_raw;
  int64_t pr_limit = 0;
  pr->add_option("--checkpoint", pr_ckpt, "model checkpoint")->required();
  pr->add_option("--charset", pr_charset, "charset file or preset name")->required();
  pr->add_option("--records", pr_records, "records file to transcribe");
  pr->add_option("--raw-image", pr_raw, "raw RGB8 file of one full-width image");
  pr->add_option("--limit", pr_limit, "stop after N records (0 = all)");

  // ---- params -------------------------------------------------------------
  auto* pa = app.add_subcommand("params", "per-layer parameter count table");
  std::string pa_preset = "full";
  pa->add_option("--preset", pa_preset, "model preset full|mini");

  // ---- inspect ------------------------------------------------------------
  auto* in = app.add_subcommand("inspect", "dump records in readable form");
  std::string in_path;
  int64_t in_limit = 10;
  bool in_ids = false;
  in->add_option("--in", in_path, "records file")->required();
  in->add_option("--limit", in_limit, "records to show (0 = all)");
  in->add_flag("--ids", in_ids, "print class-id lists");

  std::vector<const char*> argv;
  argv.push_back("street");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (gen->parsed()) {
      if (gen_count < 0) throw ConfigError("--count must be >= 0");
      if (gen_min_views < 1 || gen_max_views < gen_min_views || gen_max_views > gen_slots)
        throw ConfigError("views range must satisfy 1 <= min <= max <= slots");
      out << "effective: cmd=gen out=" << gen_out << " count=" << gen_count
          << " seed=" << gen_seed << " charset=" << gen_charset << " tile=" << gen_tile
          << " slots=" << gen_slots << " views=" << gen_min_views << ".." << gen_max_views
          << " distractor=" << gen_distractor << " blur=" << gen_blur
          << " geo=" << (gen_no_geo ? "off" : "on") << "\n";
      const Charset cs = detail::load_charset_arg(gen_charset);
      const bool mini_names = cs.size() <= 20;
      SignStyle style;
      style.tile_size = gen_tile;
      style.slots = gen_slots;
      style.distractor_prob = gen_distractor;
      style.blur_prob = gen_blur;
      style.max_scale = gen_max_scale;
      style.validate();
      RecordWriter writer(gen_out);
      for (int64_t i = 0; i < gen_count; ++i) {
        Rng rng(derive_seed(gen_seed, "gen", static_cast<uint64_t>(i)));
        std::string name;
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
          name = detail::gen_name(rng, mini_names);
          LabelSeq seq;
          ok = cs.try_encode(title_case_fold(name), &seq);
        }
        if (!ok) throw ConfigError("could not draw an encodable name for the charset");
        const int n_views = gen_min_views + static_cast<int>(rng.uniform_int(
                                static_cast<uint64_t>(gen_max_views - gen_min_views + 1)));
        SignExample e = synth_sign(derive_seed(gen_seed, "sign", static_cast<uint64_t>(i)),
                                   name, n_views, style, cs);
        if (!gen_no_geo) {
          e.has_geo = true;
          e.lat = gen_lat0 + rng.uniform() * (gen_lat1 - gen_lat0);
          e.lon = gen_lon0 + rng.uniform() * (gen_lon1 - gen_lon0);
        }
        writer.write(e.to_record());
      }
      writer.close();
      if (!gen_write_charset.empty()) {
        std::ofstream cf(gen_write_charset);
        if (!cf) throw IoError("cannot write " + gen_write_charset);
        cf << cs.to_text();
      }
      out << "wrote " << gen_count << " examples to " << gen_out << "\n";
      return 0;
    }

    if (split->parsed()) {
      out << "effective: cmd=split in=" << split_in << " out-dir=" << split_dir
          << " fractions=" << split_fracs << " wall-m=" << split_wall << "\n";
      std::vector<std::pair<std::string, double>> fracs;
      static const char* kNames[] = {"train", "validation", "test", "private_test"};
      std::istringstream fs(split_fracs);
      std::string tok;
      size_t fi = 0;
      while (std::getline(fs, tok, ',')) {
        if (fi >= 4) throw ConfigError("at most four fractions supported");
        fracs.emplace_back(kNames[fi++], std::stod(tok));
      }
      const std::vector<SignExample> all = read_all_examples(split_in);
      const SplitSet ss = make_splits(all, fracs, split_wall);
      std::filesystem::create_directories(split_dir);
      for (size_t s = 0; s < ss.names.size(); ++s) {
        const std::string path = split_dir + "/" + ss.names[s] + ".fsnl";
        write_examples(path, ss.subsets[s]);
        out << ss.names[s] << " " << ss.subsets[s].size() << " -> " << path << "\n";
      }
      out << "dropped: walls=" << ss.wall_dropped << " dedup=" << ss.dedup_dropped << "\n";
      return 0;
    }

    if (stats->parsed()) {
      out << "effective: cmd=stats train=" << stats_train
          << " freq-threshold=" << stats_freq << "\n";
      SplitSet ss;
      ss.names.push_back("train");
      ss.subsets.push_back(read_all_examples(stats_train));
      for (const auto& s : stats_subsets) {
        auto [name, path] = detail::parse_subset(s);
        ss.names.push_back(name);
        ss.subsets.push_back(read_all_examples(path));
      }
      const auto rows = corpus_stats(ss, title_stop_words(), stats_freq);
      out << std::left << std::setw(14) << "subset" << std::right << std::setw(14)
          << "nonstop_words" << std::setw(13) << "unique_words" << std::setw(11)
          << "unique_oov" << std::setw(10) << "total_oov" << std::setw(9) << "pct_oov" << "\n";
      for (const auto& r : rows) {
        std::ostringstream pct;
        pct << std::fixed << std::setprecision(1) << r.percent_oov;
        out << std::left << std::setw(14) << r.name << std::right << std::setw(14)
            << r.nonstop_words << std::setw(13) << r.unique_words << std::setw(11)
            << r.unique_oov << std::setw(10) << r.total_oov << std::setw(9) << pct.str()
            << "\n";
      }
      return 0;
    }

    if (tr->parsed()) {
      out << "effective: cmd=train records=" << tr_records << " charset=" << tr_charset
          << " preset=" << tr_preset << " steps=" << tr_steps << " batch=" << tr_batch
          << " lr=" << tr_lr << " seed=" << tr_seed << " model-seed=" << tr_model_seed
          << " eval-every=" << tr_eval_every << " clip=" << tr_clip
          << " timestamps=" << (tr_no_timestamps ? "off" : "on") << "\n";
      const Charset cs = detail::load_charset_arg(tr_charset);
      StreetModel<float> model =
          tr_resume.empty() ? StreetModel<float>(StreetConfig::by_name(tr_preset), tr_model_seed)
                            : StreetModel<float>::load(tr_resume);
      TrainOptions opt;
      opt.steps = tr_steps;
      opt.batch = tr_batch;
      opt.eval_every = tr_eval_every;
      opt.seed = tr_seed;
      opt.adam.lr = tr_lr;
      opt.clip_norm = tr_clip;
      opt.timestamps = !tr_no_timestamps;
      if (!tr_dir.empty()) {
        std::filesystem::create_directories(tr_dir);
        opt.checkpoint_dir = tr_dir;
      }
      const std::vector<SignExample> examples = read_all_examples(tr_records);
      TrainResult res;
      if (!tr_eval_records.empty()) {
        // periodic eval over a held-out set: run train in eval_every chunks
        const std::vector<SignExample> held = read_all_examples(tr_eval_records);
        TrainOptions chunk = opt;
        chunk.eval_every = 0;
        int64_t done = 0, seq = 0;
        while (done < opt.steps) {
          chunk.steps = opt.eval_every > 0 ? std::min(opt.eval_every, opt.steps - done)
                                           : opt.steps;
          chunk.seed = derive_seed(opt.seed, "chunk", static_cast<uint64_t>(seq++));
          res = train(model, examples, cs, chunk, out);
          done += chunk.steps;
          const EvalReport rep = evaluate(model, held, cs);
          out << "eval step=" << done - 1 << " word_recall=" << rep.word_recall
              << " word_precision=" << rep.word_precision
              << " sequence_error=" << rep.sequence_error << "\n";
        }
      } else {
        res = train(model, examples, cs, opt, out);
      }
      out << "trained steps=" << res.steps_run << " skipped=" << res.skipped_infeasible
          << " aborted=" << res.aborted_nonfinite << "\n";
      if (!tr_dir.empty()) out << "final checkpoint " << tr_dir << "/ckpt-final.fsnl\n";
      return 0;
    }

    if (ev->parsed()) {
      out << "effective: cmd=eval records=" << ev_records << " checkpoint=" << ev_ckpt
          << " charset=" << ev_charset << "\n";
      const Charset cs = detail::load_charset_arg(ev_charset);
      StreetModel<float> model = StreetModel<float>::load(ev_ckpt);
      std::ofstream dump;
      std::ostream* dump_ptr = nullptr;
      if (!ev_dump.empty()) {
        dump.open(ev_dump);
        if (!dump) throw IoError("cannot write " + ev_dump);
        dump_ptr = &dump;
      }
      const EvalReport rep = evaluate_file(model, ev_records, cs, dump_ptr);
      out << rep.format();
      return 0;
    }

    if (pr->parsed()) {
      out << "effective: cmd=predict checkpoint=" << pr_ckpt << " charset=" << pr_charset
          << "\n";
      const Charset cs = detail::load_charset_arg(pr_charset);
      StreetModel<float> model = StreetModel<float>::load(pr_ckpt);
      if (!pr_raw.empty()) {
        std::ifstream rf(pr_raw, std::ios::binary);
        if (!rf) throw IoError("cannot open " + pr_raw);
        std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(rf)),
                                   std::istreambuf_iterator<char>());
        const auto& c = model.config();
        const size_t want = static_cast<size_t>(c.tile) * c.image_width() * 3;
        if (bytes.size() != want)
          throw ConfigError("raw image must be " + std::to_string(want) + " bytes (" +
                            std::to_string(c.image_width()) + "x" + std::to_string(c.tile) +
                            " RGB8), got " + std::to_string(bytes.size()));
        SignExample e;
        e.image = std::move(bytes);
        e.width = c.image_width();
        e.height = c.tile;
        out << model.predict_text(image_to_tensor<float>(e), cs) << "\n";
        return 0;
      }
      if (pr_records.empty())
        throw ConfigError("predict needs --records or --raw-image");
      RecordReader reader(pr_records);
      int64_t shown = 0;
      while (auto rec = reader.next()) {
        const SignExample e = SignExample::from_record(*rec);
        out << model.predict_text(image_to_tensor<float>(e), cs) << "\n";
        if (pr_limit > 0 && ++shown >= pr_limit) break;
      }
      return 0;
    }

    if (pa->parsed()) {
      const StreetConfig cfg = StreetConfig::by_name(pa_preset);
      const StreetModel<float> model(cfg, 1);
      out << "layer parameter counts (preset " << cfg.preset << ")\n";
      for (const auto& [name, count] : model.count_params())
        out << name << " " << count << "\n";
      out << "Total " << model.total_params() << "\n";
      if (cfg.preset == "full") {
        out << "note: line readers are wired from the 64-deep line summaries\n"
               "      (top/bottom) and the 128-deep middle concatenation, giving\n"
               "      197632 / 263168 / 197632 weights and the 1968006 total above.\n"
               "      The published STREET layer table instead lists the readers as\n"
               "      263168x2 + 394240 with a 2.2M total, which implies 128- and\n"
               "      256-deep reader inputs; four 64-wide summarizers (33024x4)\n"
               "      cannot produce those widths. Configure summarizer=128 to\n"
               "      reproduce the published reader sizes.\n";
      }
      return 0;
    }

    if (in->parsed()) {
      RecordReader reader(in_path);
      int64_t shown = 0;
      while (auto rec = reader.next()) {
        out << "record " << reader.index() - 1 << "\n";
        for (const auto& [key, f] : rec->fields()) {
          out << "  " << key << " tag=" << static_cast<int>(f.tag) << " bytes=" << f.raw.size();
          if (f.tag == static_cast<uint8_t>(FieldType::kString))
            out << " \"" << f.as_string() << "\"";
          else if (f.tag == static_cast<uint8_t>(FieldType::kInt64List)) {
            const auto v = f.as_i64s();
            if (v.size() == 1) out << " value=" << v[0];
            else if (in_ids) {
              out << " [";
              for (size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
              out << "]";
            } else {
              out << " count=" << v.size();
            }
          }
          out << "\n";
        }
        if (in_limit > 0 && ++shown >= in_limit) break;
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << "usage error: no subcommand\n";
  return 1;
}

}  // namespace street::cli
