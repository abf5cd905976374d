// Copyright 2026 The gmwf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "gmwf/pipeline.hpp"

namespace {

void print_report(const gmwf::McdReport& rep, bool per_frame) {
  std::printf("n_frames=%d\n", rep.n_frames);
  std::printf("order=%d\n", rep.order);
  std::printf("mean_mcd_db=%.6f\n", rep.mean_mcd_db);
  if (per_frame) {
    for (std::size_t t = 0; t < rep.per_frame_mcd_db.size(); ++t) {
      std::printf("frame\t%zu\t%.6f\n", t, rep.per_frame_mcd_db[t]);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gmwf - parametric vocoder: mixture-model spectral envelopes and wavelet-decomposed F0"};
  app.require_subcommand(1);

  // analyze
  std::string a_in, a_out;
  gmwf::AnalyzeOptions aopt;
  auto* analyze = app.add_subcommand("analyze", "analyze a 16 kHz mono wav into a feature file");
  analyze->add_option("input", a_in, "input wav")->required();
  analyze->add_option("-o,--output", a_out, "output feature file")->required();
  analyze->add_option("--k", aopt.mixture_size, "mixture components per frame");
  analyze->add_option("--states", aopt.n_states, "HMM state count");
  analyze->add_option("--scales", aopt.n_scales, "wavelet scale count");
  analyze->add_option("--scale0", aopt.scale0_s, "smallest wavelet scale in seconds");
  analyze->add_option("--fft", aopt.fft_size, "FFT size (power of two)");
  analyze->add_option("--threads", aopt.n_threads, "worker threads (results are identical for any count)");

  // synth
  std::string s_in, s_out;
  gmwf::SynthOptions sopt;
  bool no_f0_residual = false;
  auto* synth = app.add_subcommand("synth", "synthesize a wav from a feature file");
  synth->add_option("input", s_in, "input feature file")->required();
  synth->add_option("-o,--output", s_out, "output wav")->required();
  synth->add_option("--seed", sopt.noise_seed, "noise seed");
  synth->add_option("--split-hz", sopt.voicing_split_hz, "voiced/unvoiced split frequency");
  synth->add_flag("--no-f0-residual", no_f0_residual, "reconstruct F0 from the wavelet scales only");
  synth->add_flag("--hmm-restore", sopt.hmm_restore, "quantize envelopes to the decoded HMM states");
  synth->add_option("--f0-scale", sopt.f0_scale, "multiply the reconstructed F0");
  synth->add_option("--threads", sopt.n_threads, "worker threads");

  // copysynth
  std::string c_in, c_out;
  bool anchor = false;
  bool c_frames = false;
  gmwf::AnalyzeOptions c_aopt;
  auto* copysynth = app.add_subcommand("copysynth", "analyze, resynthesize, and report MCD against the input");
  copysynth->add_option("input", c_in, "input wav")->required();
  copysynth->add_option("-o,--output", c_out, "output wav")->required();
  copysynth->add_flag("--anchor", anchor, "apply the degraded upper-spectrum anchor distortion");
  copysynth->add_flag("--frames", c_frames, "also print per-frame MCD rows");
  copysynth->add_option("--threads", c_aopt.n_threads, "worker threads");

  // mcd
  std::string m_ref, m_test;
  bool m_frames = false;
  auto* mcd_cmd = app.add_subcommand("mcd", "mel-cepstral distortion between two wavs of equal duration");
  mcd_cmd->add_option("ref", m_ref, "reference wav")->required();
  mcd_cmd->add_option("test", m_test, "test wav")->required();
  mcd_cmd->add_flag("--frames", m_frames, "also print per-frame MCD rows");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze) {
      const gmwf::Waveform w = gmwf::read_wav(a_in);
      const gmwf::FeatureFile f = gmwf::analyze(w, aopt);
      gmwf::write_feature_file(f, a_out);
      std::printf("n_frames=%u\n", f.n_frames);
      std::printf("k=%u\n", f.mixture_size);
      std::printf("states=%u\n", f.n_states);
      std::printf("scales=%u\n", f.n_scales);
    } else if (*synth) {
      sopt.include_f0_residual = !no_f0_residual;
      const gmwf::FeatureFile f = gmwf::read_feature_file(s_in);
      const gmwf::Waveform out = gmwf::synthesize(f, sopt);
      gmwf::write_wav(out, s_out);
      std::printf("n_samples=%zu\n", out.samples.size());
    } else if (*copysynth) {
      const gmwf::Waveform w = gmwf::read_wav(c_in);
      const gmwf::CopySynthResult res = gmwf::copy_synthesis(w, anchor, c_aopt);
      gmwf::write_wav(res.output, c_out);
      std::printf("anchor=%d\n", anchor ? 1 : 0);
      print_report(res.report, c_frames);
    } else if (*mcd_cmd) {
      const gmwf::Waveform ref = gmwf::read_wav(m_ref);
      const gmwf::Waveform test = gmwf::read_wav(m_test);
      print_report(gmwf::mcd_between_waveforms(ref, test), m_frames);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
